//! Minimal SVG 1.1 emitter: axes, ticks, polylines and pole/zero markers.
//! Static result displays only, so there is no plotting dependency.

/// One chart in screen space 0..width x 0..height with a data viewport.
pub struct Plot {
    width: f64,
    height: f64,
    margin: f64,
    title: String,
    x_label: String,
    y_label: String,
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
}

const COLORS: &[&str] = &["#1f6fb2", "#c0392b", "#27ae60", "#8e44ad", "#d68910", "#16a085"];

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            width: 860.0,
            height: 560.0,
            margin: 64.0,
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            x_range: (0.0, 1.0),
            y_range: (0.0, 1.0),
            body: String::new(),
        }
    }

    /// Picks the viewport from the union of the given series, with 5%
    /// padding and degenerate ranges widened.
    pub fn fit_ranges<'a, I>(&mut self, series: I)
    where
        I: IntoIterator<Item = &'a [(f64, f64)]>,
    {
        let mut x = (f64::INFINITY, f64::NEG_INFINITY);
        let mut y = (f64::INFINITY, f64::NEG_INFINITY);
        for s in series {
            for &(px, py) in s {
                if px.is_finite() {
                    x = (x.0.min(px), x.1.max(px));
                }
                if py.is_finite() {
                    y = (y.0.min(py), y.1.max(py));
                }
            }
        }
        if !x.0.is_finite() || x.0 == x.1 {
            x = (x.0.min(0.0) - 1.0, x.0.max(0.0) + 1.0);
        }
        if !y.0.is_finite() || y.0 == y.1 {
            y = (y.0.min(0.0) - 1.0, y.0.max(0.0) + 1.0);
        }
        let xpad = 0.05 * (x.1 - x.0);
        let ypad = 0.05 * (y.1 - y.0);
        self.x_range = (x.0 - xpad, x.1 + xpad);
        self.y_range = (y.0 - ypad, y.1 + ypad);
    }

    fn sx(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        self.margin + (x - lo) / (hi - lo) * (self.width - 2.0 * self.margin)
    }

    fn sy(&self, y: f64) -> f64 {
        let (lo, hi) = self.y_range;
        self.height - self.margin - (y - lo) / (hi - lo) * (self.height - 2.0 * self.margin)
    }

    pub fn color(index: usize) -> &'static str {
        COLORS[index % COLORS.len()]
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], color: &str, label: Option<&str>) {
        if points.is_empty() {
            return;
        }
        let mut path = String::new();
        for &(x, y) in points {
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            path.push_str(&format!("{:.2},{:.2} ", self.sx(x), self.sy(y)));
        }
        self.body.push_str(&format!(
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" points=\"{}\"/>\n",
            path.trim_end()
        ));
        if let Some(text) = label {
            let &(x, y) = points.last().unwrap();
            self.body.push_str(&format!(
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
                self.sx(x) + 4.0,
                self.sy(y),
                escape(text)
            ));
        }
    }

    /// `x` crosses for poles.
    pub fn cross_markers(&mut self, points: &[(f64, f64)], color: &str) {
        for &(x, y) in points {
            let (cx, cy) = (self.sx(x), self.sy(y));
            self.body.push_str(&format!(
                "  <path d=\"M {x0:.2} {y0:.2} L {x1:.2} {y1:.2} M {x0:.2} {y1:.2} L {x1:.2} {y0:.2}\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
                x0 = cx - 5.0,
                y0 = cy - 5.0,
                x1 = cx + 5.0,
                y1 = cy + 5.0,
            ));
        }
    }

    /// Hollow circles for zeros.
    pub fn circle_markers(&mut self, points: &[(f64, f64)], color: &str) {
        for &(x, y) in points {
            self.body.push_str(&format!(
                "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
                self.sx(x),
                self.sy(y)
            ));
        }
    }

    fn ticks(range: (f64, f64)) -> Vec<f64> {
        let span = range.1 - range.0;
        let raw = span / 6.0;
        let mag = 10f64.powf(raw.abs().log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| span / s <= 7.0)
            .unwrap_or(mag * 10.0);
        let first = (range.0 / step).ceil() * step;
        let mut out = Vec::new();
        let mut t = first;
        while t <= range.1 + 1e-12 * span.abs() {
            out.push(t);
            t += step;
        }
        out
    }

    pub fn render(&self) -> String {
        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
            w = self.width,
            h = self.height
        ));
        svg.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        let (x0, y0) = (self.margin, self.margin);
        let (x1, y1) = (self.width - self.margin, self.height - self.margin);
        svg.push_str(&format!(
            "  <rect x=\"{x0}\" y=\"{y0}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#444\"/>\n",
            x1 - x0,
            y1 - y0
        ));

        for t in Self::ticks(self.x_range) {
            let sx = self.sx(t);
            svg.push_str(&format!(
                "  <line x1=\"{sx:.2}\" y1=\"{y1:.2}\" x2=\"{sx:.2}\" y2=\"{:.2}\" stroke=\"#444\"/>\n",
                y1 + 5.0
            ));
            svg.push_str(&format!(
                "  <line x1=\"{sx:.2}\" y1=\"{y0:.2}\" x2=\"{sx:.2}\" y2=\"{y1:.2}\" stroke=\"#eee\"/>\n"
            ));
            svg.push_str(&format!(
                "  <text x=\"{sx:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                y1 + 18.0,
                tick_label(t)
            ));
        }
        for t in Self::ticks(self.y_range) {
            let sy = self.sy(t);
            svg.push_str(&format!(
                "  <line x1=\"{:.2}\" y1=\"{sy:.2}\" x2=\"{x0:.2}\" y2=\"{sy:.2}\" stroke=\"#444\"/>\n",
                x0 - 5.0
            ));
            svg.push_str(&format!(
                "  <line x1=\"{x0:.2}\" y1=\"{sy:.2}\" x2=\"{x1:.2}\" y2=\"{sy:.2}\" stroke=\"#eee\"/>\n"
            ));
            svg.push_str(&format!(
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
                x0 - 8.0,
                sy + 4.0,
                tick_label(t)
            ));
        }

        // Zero axes when inside the viewport.
        if self.x_range.0 < 0.0 && self.x_range.1 > 0.0 {
            let sx = self.sx(0.0);
            svg.push_str(&format!(
                "  <line x1=\"{sx:.2}\" y1=\"{y0:.2}\" x2=\"{sx:.2}\" y2=\"{y1:.2}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n"
            ));
        }
        if self.y_range.0 < 0.0 && self.y_range.1 > 0.0 {
            let sy = self.sy(0.0);
            svg.push_str(&format!(
                "  <line x1=\"{x0:.2}\" y1=\"{sy:.2}\" x2=\"{x1:.2}\" y2=\"{sy:.2}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n"
            ));
        }

        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
            self.width / 2.0,
            self.margin / 2.0,
            escape(&self.title)
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            self.width / 2.0,
            self.height - 16.0,
            escape(&self.x_label)
        ));
        svg.push_str(&format!(
            "  <text x=\"18\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 {mid:.2})\">{}</text>\n",
            self.height / 2.0,
            escape(&self.y_label),
            mid = self.height / 2.0
        ));

        svg.push_str(&self.body);
        svg.push_str("</svg>\n");
        svg
    }
}

fn tick_label(t: f64) -> String {
    if t == 0.0 {
        return "0".into();
    }
    let a = t.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{t:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{t:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
