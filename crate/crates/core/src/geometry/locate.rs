use super::Mesh;

/// Element containing a point together with its barycentric coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    pub element: usize,
    pub bary: [f64; 3],
    /// False when the point lies outside the mesh and the nearest element
    /// was used instead (coordinates clamped onto it).
    pub inside: bool,
}

/// Uniform bucket grid over element bounding boxes.
pub struct PointLocator<'m> {
    mesh: &'m Mesh,
    origin: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

fn barycentric(v: &[[f64; 2]; 3], x: [f64; 2]) -> [f64; 3] {
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    let l1 = ((x[0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (x[1] - v[0][1])) / det;
    let l2 = ((v[1][0] - v[0][0]) * (x[1] - v[0][1]) - (x[0] - v[0][0]) * (v[1][1] - v[0][1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

fn clamp_to_triangle(v: &[[f64; 2]; 3], x: [f64; 2]) -> ([f64; 3], f64) {
    // nearest point over the three edges
    let mut best = (f64::INFINITY, [0.0; 3]);
    for i in 0..3 {
        let (a, b) = (v[i], v[(i + 1) % 3]);
        let d = [b[0] - a[0], b[1] - a[1]];
        let t = (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
        let p = [a[0] + t * d[0], a[1] + t * d[1]];
        let dist = (p[0] - x[0]).hypot(p[1] - x[1]);
        if dist < best.0 {
            let mut l = [0.0; 3];
            l[i] = 1.0 - t;
            l[(i + 1) % 3] = t;
            best = (dist, l);
        }
    }
    (best.1, best.0)
}

impl<'m> PointLocator<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for x in &mesh.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(x[d]);
                hi[d] = hi[d].max(x[d]);
            }
        }
        let side = ((mesh.n_elements() as f64).sqrt().ceil() as usize).max(1);
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(1e-300),
            ((hi[1] - lo[1]) / side as f64).max(1e-300),
        ];
        let mut buckets = vec![Vec::new(); side * side];
        let mut loc = Self { mesh, origin: lo, cell, dims, buckets: Vec::new() };
        for k in 0..mesh.n_elements() {
            let v = mesh.vertices(k);
            let (mut a, mut b) = ([usize::MAX; 2], [0usize; 2]);
            for p in &v {
                let c = loc.cell_of(*p);
                for d in 0..2 {
                    a[d] = a[d].min(c[d]);
                    b[d] = b[d].max(c[d]);
                }
            }
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    buckets[j * side + i].push(k);
                }
            }
        }
        loc.buckets = buckets;
        loc
    }

    fn cell_of(&self, x: [f64; 2]) -> [usize; 2] {
        let mut c = [0; 2];
        for d in 0..2 {
            let f = ((x[d] - self.origin[d]) / self.cell[d]).floor();
            c[d] = (f.max(0.0) as usize).min(self.dims[d] - 1);
        }
        c
    }

    /// The element containing `x` (with tolerance `1e−12` on barycentric
    /// coordinates), or `None` outside the mesh.
    pub fn locate(&self, x: [f64; 2]) -> Option<Location> {
        let c = self.cell_of(x);
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        for &k in &self.buckets[c[1] * self.dims[0] + c[0]] {
            let l = barycentric(&self.mesh.vertices(k), x);
            let m = l[0].min(l[1]).min(l[2]);
            if m >= -1e-12 && best.is_none_or(|b| m > b.0) {
                best = Some((m, k, l));
            }
        }
        best.map(|(_, element, bary)| Location { element, bary, inside: true })
    }

    /// Like [`Self::locate`], but falls back to the nearest element for
    /// points outside the polygonal mesh (e.g. between a chord and the
    /// curved boundary).
    pub fn locate_or_nearest(&self, x: [f64; 2]) -> Location {
        if let Some(l) = self.locate(x) {
            return l;
        }
        let c = self.cell_of(x);
        let mut best = (f64::INFINITY, 0usize, [1.0, 0.0, 0.0]);
        let mut radius = 0usize;
        loop {
            let (i0, i1) = (c[0].saturating_sub(radius), (c[0] + radius).min(self.dims[0] - 1));
            let (j0, j1) = (c[1].saturating_sub(radius), (c[1] + radius).min(self.dims[1] - 1));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    for &k in &self.buckets[j * self.dims[0] + i] {
                        let (l, d) = clamp_to_triangle(&self.mesh.vertices(k), x);
                        if d < best.0 || (d == best.0 && k < best.1) {
                            best = (d, k, l);
                        }
                    }
                }
            }
            let reach = radius as f64 * self.cell[0].min(self.cell[1]);
            let exhausted = i0 == 0 && j0 == 0 && i1 == self.dims[0] - 1 && j1 == self.dims[1] - 1;
            if (best.0.is_finite() && best.0 <= reach) || exhausted {
                break;
            }
            radius += 1;
        }
        Location { element: best.1, bary: best.2, inside: false }
    }

    /// Linear interpolation of nodal values at `x`.
    pub fn interpolate(&self, values: &[f64], x: [f64; 2]) -> f64 {
        let l = self.locate_or_nearest(x);
        let e = self.mesh.elements[l.element];
        (0..3).map(|i| l.bary[i] * values[e[i]]).sum()
    }
}
