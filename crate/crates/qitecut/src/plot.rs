//! Minimal native SVG histograms for sweep outputs. Presentation only: no
//! data file depends on anything produced here.

/// Renders a 20-bin histogram of values in [0, 1] as a standalone SVG
/// document. `ref_line`, when given, draws a labeled vertical marker (used
/// for the 0.878 classical reference).
pub fn histogram_svg(values: &[f64], title: &str, x_label: &str, ref_line: Option<f64>) -> String {
    const BINS: usize = 20;
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const ML: f64 = 56.0; // margins
    const MR: f64 = 20.0;
    const MT: f64 = 40.0;
    const MB: f64 = 52.0;

    let mut counts = [0usize; BINS];
    for &v in values {
        let b = ((v * BINS as f64) as usize).min(BINS - 1);
        counts[b] += 1;
    }
    let max_count = counts.iter().copied().max().unwrap_or(0).max(1);

    let plot_w = W - ML - MR;
    let plot_h = H - MT - MB;
    let x = |v: f64| ML + v * plot_w;
    let y = |count: f64| MT + plot_h * (1.0 - count / max_count as f64);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        xml_escape(title)
    ));

    // Bars.
    for (b, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let x0 = x(b as f64 / BINS as f64);
        let x1 = x((b + 1) as f64 / BINS as f64);
        let y0 = y(count as f64);
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#4878a8\" stroke=\"white\" stroke-width=\"0.5\"/>\n",
            x0,
            y0,
            x1 - x0,
            MT + plot_h - y0
        ));
    }

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        MT + plot_h,
        W - MR,
        MT + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        MT + plot_h
    ));
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{v:.1}</text>\n",
            x(v),
            MT + plot_h + 16.0
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            x(v),
            MT + plot_h,
            x(v),
            MT + plot_h + 4.0
        ));
    }
    for k in 0..=4 {
        let count = max_count as f64 * k as f64 / 4.0;
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{:.0}</text>\n",
            ML - 6.0,
            y(count) + 4.0,
            count
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        ML + plot_w / 2.0,
        H - 14.0,
        xml_escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">graphs</text>\n",
        MT + plot_h / 2.0,
        MT + plot_h / 2.0
    ));

    if let Some(r) = ref_line {
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{MT}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#c03030\" \
             stroke-dasharray=\"6 3\" stroke-width=\"1.5\"/>\n",
            x(r),
            x(r),
            MT + plot_h
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
             fill=\"#c03030\" text-anchor=\"middle\">{r}</text>\n",
            x(r),
            MT - 6.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
