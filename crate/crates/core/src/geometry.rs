//! Small axis-aligned geometry helpers shared by meshing, weights and the
//! local-error integrals.

/// Closed axis-aligned rectangle `[x0,x1] x [y0,y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }

    pub fn contains_strictly(&self, x: f64, y: f64) -> bool {
        self.x0 < x && x < self.x1 && self.y0 < y && y < self.y1
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.x0 <= other.x0 && other.x1 <= self.x1 && self.y0 <= other.y0 && other.y1 <= self.y1
    }

    /// Grow by `pad` on every side.
    pub fn padded(&self, pad: f64) -> Rect {
        Rect::new(self.x0 - pad, self.x1 + pad, self.y0 - pad, self.y1 + pad)
    }

    /// Intersection with another rectangle (empty rectangles collapse).
    pub fn intersect(&self, other: &Rect) -> Rect {
        Rect::new(
            self.x0.max(other.x0),
            self.x1.min(other.x1),
            self.y0.max(other.y0),
            self.y1.min(other.y1),
        )
    }
}

/// The polygonal domain Ω: an axis-aligned bounding rectangle with an
/// optional rectangular cutout sharing the bounding box's upper-right corner
/// region (the L-shape case). `cutout` is removed from `bounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGeometry {
    pub bounds: Rect,
    pub cutout: Option<Rect>,
    /// Area override for polygonal domains that a rect-with-cutout cannot
    /// describe (meshes built from raw parts).
    explicit_area: Option<f64>,
}

impl DomainGeometry {
    pub fn rectangle(bounds: Rect) -> Self {
        DomainGeometry { bounds, cutout: None, explicit_area: None }
    }

    pub fn with_cutout(bounds: Rect, cutout: Rect) -> Self {
        DomainGeometry { bounds, cutout: Some(cutout), explicit_area: None }
    }

    /// A general polygon known only through its bounding box and area.
    pub fn polygonal(bounds: Rect, area: f64) -> Self {
        DomainGeometry { bounds, cutout: None, explicit_area: Some(area) }
    }

    pub fn area(&self) -> f64 {
        if let Some(a) = self.explicit_area {
            return a;
        }
        let a = self.bounds.width() * self.bounds.height();
        match &self.cutout {
            Some(c) => {
                let i = c.intersect(&self.bounds);
                a - (i.width().max(0.0) * i.height().max(0.0))
            }
            None => a,
        }
    }

    /// Point lies in the closure of Ω.
    pub fn contains_closure(&self, x: f64, y: f64) -> bool {
        if !self.bounds.contains(x, y) {
            return false;
        }
        match &self.cutout {
            Some(c) => !c.contains_strictly(x, y),
            None => true,
        }
    }
}
