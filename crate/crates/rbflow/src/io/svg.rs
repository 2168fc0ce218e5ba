//! Minimal deterministic SVG line and scatter plots for monitor series.
//! Byte-identical output for identical input is part of the contract, so all
//! coordinates are formatted with fixed precision.

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 50.0;

#[derive(Debug, Clone, Copy, Default)]
pub struct PlotOptions {
    pub log_y: bool,
    pub scatter: bool,
}

const COLORS: [&str; 6] = ["#1f6fb2", "#cc3311", "#117733", "#aa4499", "#999933", "#332288"];

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Render named series into a fixed-size line (or scatter) plot. Empty input
/// produces an empty-axes frame.
pub fn plot(title: &str, series: &[(String, Vec<(f64, f64)>)], opts: &PlotOptions) -> String {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (_, s) in series {
        for &(x, y) in s {
            if opts.log_y {
                if y > 0.0 {
                    pts.push((x, y.log10()));
                }
            } else {
                pts.push((x, y));
            }
        }
    }
    let (x0, x1, y0, y1) = if pts.is_empty() {
        (0.0, 1.0, 0.0, 1.0)
    } else {
        let mut x0 = f64::INFINITY;
        let mut x1 = f64::NEG_INFINITY;
        let mut y0 = f64::INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        for &(x, y) in &pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if y1 == y0 {
            y1 = y0 + 1.0;
        }
        (x0, x1, y0, y1)
    };
    let sx = (W - 2.0 * MARGIN) / (x1 - x0);
    let sy = (H - 2.0 * MARGIN) / (y1 - y0);
    let px = |x: f64| MARGIN + (x - x0) * sx;
    let py = |y: f64| H - MARGIN - (y - y0) * sy;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">{}</text>\n",
        MARGIN, title
    ));
    // axes
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN),
        fmt(H - MARGIN),
        fmt(W - MARGIN),
        fmt(H - MARGIN)
    ));
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN),
        fmt(MARGIN),
        fmt(MARGIN),
        fmt(H - MARGIN)
    ));
    // axis range labels
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{:.6e}</text>\n",
        fmt(MARGIN),
        fmt(H - MARGIN + 16.0),
        x0
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">{:.6e}</text>\n",
        fmt(W - MARGIN),
        fmt(H - MARGIN + 16.0),
        x1
    ));
    let ylabel = |v: f64| if opts.log_y { format!("1e{v:.2}") } else { format!("{v:.6e}") };
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
        fmt(4.0),
        fmt(H - MARGIN),
        ylabel(y0)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
        fmt(4.0),
        fmt(MARGIN + 6.0),
        ylabel(y1)
    ));

    for (si, (name, s)) in series.iter().enumerate() {
        let color = COLORS[si % COLORS.len()];
        let mapped: Vec<(f64, f64)> = s
            .iter()
            .filter_map(|&(x, y)| {
                let yy = if opts.log_y {
                    if y > 0.0 {
                        y.log10()
                    } else {
                        return None;
                    }
                } else {
                    y
                };
                Some((px(x), py(yy)))
            })
            .collect();
        if opts.scatter {
            for (x, y) in &mapped {
                out.push_str(&format!(
                    "<circle cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"{}\"/>\n",
                    fmt(*x),
                    fmt(*y),
                    color
                ));
            }
        } else if !mapped.is_empty() {
            let path: Vec<String> = mapped.iter().map(|(x, y)| format!("{},{}", fmt(*x), fmt(*y))).collect();
            out.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                color,
                path.join(" ")
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" fill=\"{}\">{}</text>\n",
            fmt(W - MARGIN - 150.0),
            fmt(MARGIN + 16.0 * si as f64),
            color,
            name
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// One SVG per numeric column of a monitors CSV (`t` first).
pub fn plots_from_csv(header: &[String], rows: &[Vec<f64>], log_y: bool) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if header.is_empty() || header[0] != "t" {
        return out;
    }
    for col in 1..header.len() {
        let series: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[col])).collect();
        let name = header[col].clone();
        let svg = plot(&name, &[(name.clone(), series)], &PlotOptions { log_y, scatter: false });
        out.push((name, svg));
    }
    out
}
