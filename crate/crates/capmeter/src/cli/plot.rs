//! Minimal SVG line charts. Output depends only on the report, so identical
//! reports give identical files.

use std::fmt::Write as _;

use super::fit::FitReport;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 50.0;

struct Panel {
    x0: f64,
    lx_min: f64,
    lx_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Panel {
    fn new(x0: f64, ns: &[f64], ys: impl Iterator<Item = f64>) -> Self {
        let lx_min = ns.iter().copied().fold(f64::INFINITY, f64::min).log10();
        let mut lx_max = ns.iter().copied().fold(f64::NEG_INFINITY, f64::max).log10();
        if lx_max <= lx_min {
            lx_max = lx_min + 1.0;
        }
        let (mut y_min, mut y_max) =
            ys.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !y_min.is_finite() {
            (y_min, y_max) = (0.0, 1.0);
        }
        if y_max - y_min < 1e-12 {
            y_max = y_min + 1.0;
        }
        let pad = 0.05 * (y_max - y_min);
        Self { x0, lx_min, lx_max, y_min: y_min - pad, y_max: y_max + pad }
    }

    fn px(&self, n: f64) -> f64 {
        self.x0 + MARGIN + (n.log10() - self.lx_min) / (self.lx_max - self.lx_min) * (PANEL_W - MARGIN - 10.0)
    }

    fn py(&self, y: f64) -> f64 {
        PANEL_H - MARGIN + 20.0 - (y - self.y_min) / (self.y_max - self.y_min) * (PANEL_H - MARGIN - 10.0)
    }

    fn axes(&self, svg: &mut String, title: &str) {
        let (left, right) = (self.x0 + MARGIN, self.x0 + PANEL_W - 10.0);
        let (top, bottom) = (self.py(self.y_max), self.py(self.y_min));
        let _ = writeln!(
            svg,
            r#"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            right - left,
            bottom - top
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{title}</text>"#,
            (left + right) / 2.0,
            top - 6.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">N</text>"#,
            (left + right) / 2.0,
            bottom + 32.0
        );
        for decade in self.lx_min.ceil() as i32..=self.lx_max.floor() as i32 {
            let x = self.px(10f64.powi(decade));
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
                bottom + 4.0
            );
            let _ =
                writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{decade}</text>"#, bottom + 16.0);
        }
        for i in 0..=4 {
            let v = self.y_min + (self.y_max - self.y_min) * i as f64 / 4.0;
            let y = self.py(v);
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="black"/>"#,
                left - 4.0
            );
            let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, left - 6.0, y + 4.0);
        }
    }

    fn polyline(&self, svg: &mut String, pts: &[(f64, f64)], colour: &str) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|&(n, y)| format!("{:.2},{:.2}", self.px(n), self.py(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            coords.join(" ")
        );
    }
}

/// Ū with error bars (left) and fitted C (right) against N on log axes.
pub(crate) fn render_svg(report: &FitReport) -> String {
    let ns: Vec<f64> = report.points.iter().map(|p| p.n as f64).collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
        2.0 * PANEL_W,
        PANEL_H + 20.0
    );

    let energy =
        Panel::new(0.0, &ns, report.points.iter().flat_map(|p| [p.u_mean - p.u_stderr, p.u_mean + p.u_stderr]));
    energy.axes(&mut svg, &format!("U(N) [{}]", report.scale));
    for p in &report.points {
        let (x, lo, hi) = (energy.px(p.n as f64), energy.py(p.u_mean - p.u_stderr), energy.py(p.u_mean + p.u_stderr));
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}" stroke="gray"/>"#);
        let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{:.2}" r="2.5" fill="black"/>"#, energy.py(p.u_mean));
    }

    let sig: Vec<(f64, f64)> = report.points.iter().filter_map(|p| Some((p.n as f64, p.capacity_sigmoid?))).collect();
    let poly: Vec<(f64, f64)> =
        report.points.iter().filter_map(|p| Some((p.n as f64, p.capacity_polynomial?))).collect();
    let capacity = Panel::new(PANEL_W, &ns, sig.iter().chain(&poly).map(|p| p.1));
    capacity.axes(&mut svg, "C(N)");
    capacity.polyline(&mut svg, &sig, "steelblue");
    capacity.polyline(&mut svg, &poly, "darkorange");
    let legend_y = capacity.py(capacity.y_max) + 14.0;
    let lx = PANEL_W + MARGIN + 8.0;
    let _ = writeln!(svg, r#"<text x="{lx:.2}" y="{legend_y:.2}" fill="steelblue">sigmoid</text>"#);
    let _ = writeln!(svg, r#"<text x="{lx:.2}" y="{:.2}" fill="darkorange">polynomial</text>"#, legend_y + 14.0);
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::fit::FitPoint;
    use crate::protocol::EnergyScale;

    fn report() -> FitReport {
        FitReport {
            label: "m".into(),
            source: "-".into(),
            scale: EnergyScale::Nll,
            n_max: 1000,
            points: [10, 100, 1000]
                .iter()
                .map(|&n| FitPoint {
                    n,
                    u_mean: 1.0 / n as f64,
                    u_stderr: 0.001,
                    capacity_sigmoid: Some(1.0),
                    capacity_polynomial: None,
                })
                .collect(),
            sigmoid: None,
            polynomial: None,
            params: None,
            capacity_per_param_percent: None,
            warnings: vec![],
        }
    }

    #[test]
    fn svg_is_deterministic_and_log_scaled() {
        let a = render_svg(&report());
        assert_eq!(a, render_svg(&report()));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        for decade in ["1e1", "1e2", "1e3"] {
            assert!(a.contains(&format!(">{decade}<")), "missing tick {decade}");
        }
        // decades are evenly spaced on the x axis
        let p = Panel::new(0.0, &[10.0, 1000.0], [0.0, 1.0].into_iter());
        assert!(((p.px(100.0) - p.px(10.0)) - (p.px(1000.0) - p.px(100.0))).abs() < 1e-9);
    }
}
