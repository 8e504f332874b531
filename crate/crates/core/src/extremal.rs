//! Extremal length of quadrilaterals and ring domains on a uniform grid.
//!
//! The potential is 0 on arc A, 1 on arc B and insulated elsewhere; the
//! extremal length of the family of curves joining A to B is the reciprocal
//! of its Dirichlet energy. Unknowns sit at cell centres. A face between an
//! active cell and a Dirichlet boundary at fractional distance `θ` (in cell
//! units) has conductance `1/θ`; faces on free boundary or on excised cells
//! carry no flux.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::interp::UnivalentSeries;
use crate::maps::{scan, Domain, PlanarC1Map};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcLabel {
    A,
    B,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Edge `i` joins vertex `i` to vertex `i + 1` and carries `labels[i]`.
    Polygon { vertices: Vec<[f64; 2]>, labels: Vec<ArcLabel> },
    /// Inner circle is arc A, outer circle arc B.
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    pub shape: Shape,
    /// Cells across the longer side of the bounding box on the finer grid.
    pub resolution: usize,
    #[serde(default)]
    pub excision: Option<Disk>,
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1])).clamp(0.0, 1.0);
    let q = [a[0] + t * ab[0] - p[0], a[1] + t * ab[1] - p[1]];
    q[0].hypot(q[1])
}

impl GridDomain {
    pub fn rect(w: f64, h: f64, horizontal: bool, resolution: usize) -> Self {
        use ArcLabel::*;
        let labels = if horizontal { vec![Free, B, Free, A] } else { vec![A, Free, B, Free] };
        Self {
            shape: Shape::Polygon { vertices: vec![[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]], labels },
            resolution,
            excision: None,
        }
    }

    pub fn polygon(vertices: Vec<[f64; 2]>, labels: Vec<ArcLabel>, resolution: usize) -> Result<Self> {
        let d = Self { shape: Shape::Polygon { vertices, labels }, resolution, excision: None };
        d.validate()?;
        Ok(d)
    }

    pub fn annulus(center: [f64; 2], inner: f64, outer: f64, resolution: usize) -> Result<Self> {
        let d = Self { shape: Shape::Annulus { center, inner, outer }, resolution, excision: None };
        d.validate()?;
        Ok(d)
    }

    pub fn with_excision(&self, center: [f64; 2], radius: f64) -> Result<Self> {
        let d = Self { excision: (radius > 0.0).then_some(Disk { center, radius }), ..self.clone() };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 4 {
            return Err(Error::invalid("resolution must be at least 4"));
        }
        match &self.shape {
            Shape::Polygon { vertices, labels } => {
                if vertices.len() < 3 || labels.len() != vertices.len() {
                    return Err(Error::invalid("polygon needs ≥ 3 vertices and one label per edge"));
                }
                if !labels.contains(&ArcLabel::A) || !labels.contains(&ArcLabel::B) {
                    return Err(Error::invalid("arcs A and B must both be nonempty"));
                }
                let area: f64 = (0..vertices.len()).map(|i| cross(vertices[i], vertices[(i + 1) % vertices.len()])).sum();
                if area <= 0.0 {
                    return Err(Error::invalid("polygon must be counterclockwise"));
                }
            }
            Shape::Annulus { inner, outer, .. } => {
                if !(*inner > 0.0 && outer > inner) {
                    return Err(Error::invalid("annulus needs 0 < inner < outer"));
                }
            }
        }
        if let Some(e) = self.excision {
            if !self.inside(e.center) {
                return Err(Error::invalid("excised disk centre lies outside the domain"));
            }
            match &self.shape {
                Shape::Polygon { vertices, labels } => {
                    let n = vertices.len();
                    for i in 0..n {
                        let d = seg_dist(e.center, vertices[i], vertices[(i + 1) % n]);
                        if d <= e.radius {
                            return Err(Error::invalid(if labels[i] == ArcLabel::Free {
                                "excised disk meets the free boundary"
                            } else {
                                "excised disk touches a marked arc"
                            }));
                        }
                    }
                }
                Shape::Annulus { center, inner, outer } => {
                    let r = (e.center[0] - center[0]).hypot(e.center[1] - center[1]);
                    if r - e.radius <= *inner || r + e.radius >= *outer {
                        return Err(Error::invalid("excised disk touches a marked arc"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn bbox(&self) -> [f64; 4] {
        match &self.shape {
            Shape::Polygon { vertices, .. } => vertices.iter().fold(
                [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY],
                |b, v| [b[0].min(v[0]), b[1].max(v[0]), b[2].min(v[1]), b[3].max(v[1])],
            ),
            Shape::Annulus { center, outer, .. } => {
                [center[0] - outer, center[0] + outer, center[1] - outer, center[1] + outer]
            }
        }
    }

    pub fn inside(&self, p: [f64; 2]) -> bool {
        match &self.shape {
            Shape::Polygon { vertices, .. } => {
                let n = vertices.len();
                let mut c = false;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]) {
                        c = !c;
                    }
                }
                c
            }
            Shape::Annulus { center, inner, outer } => {
                let r = (p[0] - center[0]).hypot(p[1] - center[1]);
                r > *inner && r < *outer
            }
        }
    }

    fn blocked(&self, p: [f64; 2]) -> bool {
        self.excision
            .map_or(false, |e| (p[0] - e.center[0]).hypot(p[1] - e.center[1]) < e.radius)
    }

    /// First boundary crossing on the segment from `p` (inside) to `q`:
    /// fraction along the segment and the label of the crossed arc.
    fn crossing(&self, p: [f64; 2], q: [f64; 2]) -> (f64, ArcLabel) {
        let d = sub(q, p);
        match &self.shape {
            Shape::Polygon { vertices, labels } => {
                let n = vertices.len();
                let mut best = (f64::INFINITY, ArcLabel::Free);
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    let e = sub(b, a);
                    let den = cross(d, e);
                    if den == 0.0 {
                        continue;
                    }
                    let ap = sub(a, p);
                    let t = cross(ap, e) / den;
                    let s = cross(ap, d) / den;
                    if (0.0..=1.0).contains(&t) && (-1e-12..=1.0 + 1e-12).contains(&s) && t < best.0 {
                        best = (t, labels[i]);
                    }
                }
                if best.0.is_finite() { best } else { (1.0, ArcLabel::Free) }
            }
            Shape::Annulus { center, inner, outer } => {
                let o = sub(p, *center);
                let a = d[0] * d[0] + d[1] * d[1];
                let bq = 2.0 * (o[0] * d[0] + o[1] * d[1]);
                let cc = o[0] * o[0] + o[1] * o[1];
                let mut best = (f64::INFINITY, ArcLabel::Free);
                for (r, lab) in [(*inner, ArcLabel::A), (*outer, ArcLabel::B)] {
                    let disc = bq * bq - 4.0 * a * (cc - r * r);
                    if disc < 0.0 {
                        continue;
                    }
                    let sq = disc.sqrt();
                    for t in [(-bq - sq) / (2.0 * a), (-bq + sq) / (2.0 * a)] {
                        if (0.0..=1.0).contains(&t) && t < best.0 {
                            best = (t, lab);
                        }
                    }
                }
                if best.0.is_finite() { best } else { (1.0, ArcLabel::Free) }
            }
        }
    }

    /// The quadrilateral with the roles of marked and free arcs exchanged.
    /// Requires exactly two maximal free runs of edges.
    pub fn conjugate(&self) -> Result<Self> {
        let Shape::Polygon { vertices, labels } = &self.shape else {
            return Err(Error::invalid("conjugate is defined for polygons"));
        };
        let n = labels.len();
        let start = (0..n)
            .find(|&i| labels[i] != ArcLabel::Free && labels[(i + 1) % n] == ArcLabel::Free)
            .ok_or_else(|| Error::invalid("no free arc"))?;
        let mut new = vec![ArcLabel::Free; n];
        let mut run = 0;
        let mut prev_free = false;
        for k in 1..=n {
            let i = (start + k) % n;
            let free = labels[i] == ArcLabel::Free;
            if free && !prev_free {
                run += 1;
            }
            if free {
                new[i] = if run == 1 { ArcLabel::A } else { ArcLabel::B };
            }
            prev_free = free;
        }
        if run != 2 {
            return Err(Error::invalid(format!("expected two free arcs, found {run}")));
        }
        Ok(Self { shape: Shape::Polygon { vertices: vertices.clone(), labels: new }, ..self.clone() })
    }

    /// Image quadrilateral under `f`: each edge is sampled at `per_edge`
    /// points and the images joined by segments carrying the edge's label.
    pub fn mapped(&self, f: &PlanarC1Map, per_edge: usize) -> Result<Self> {
        let Shape::Polygon { vertices, labels } = &self.shape else {
            return Err(Error::invalid("image domains are built from polygons"));
        };
        let n = vertices.len();
        let mut vs = Vec::with_capacity(n * per_edge);
        let mut ls = Vec::with_capacity(n * per_edge);
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            for k in 0..per_edge {
                let s = k as f64 / per_edge as f64;
                let w = f.eval(Complex64::new(a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])));
                vs.push([w.re, w.im]);
                ls.push(labels[i]);
            }
        }
        let d = Self { shape: Shape::Polygon { vertices: vs, labels: ls }, resolution: self.resolution, excision: None };
        d.validate()?;
        Ok(d)
    }
}

const NONE: u32 = u32::MAX;

/// Discretized domain and its linear system.
#[derive(Debug, Clone)]
pub struct Grid {
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Unknown index per cell, `u32::MAX` for inactive cells.
    pub index: Vec<u32>,
    pub cells: Vec<(usize, usize)>,
    neighbors: Vec<[u32; 4]>,
    diag: Vec<f64>,
    rhs: Vec<f64>,
    bc_sq: Vec<f64>,
}

impl Grid {
    pub fn build(d: &GridDomain, n: usize) -> Result<Self> {
        let b = d.bbox();
        let (w, hgt) = (b[1] - b[0], b[3] - b[2]);
        let h = w.max(hgt) / n as f64;
        let nx = (w / h - 1e-9).ceil().max(1.0) as usize;
        let ny = (hgt / h - 1e-9).ceil().max(1.0) as usize;
        let origin = [b[0], b[2]];
        let centre = |i: usize, j: usize| [origin[0] + (i as f64 + 0.5) * h, origin[1] + (j as f64 + 0.5) * h];
        let inside: Vec<bool> = (0..nx * ny)
            .into_par_iter()
            .map(|c| {
                let p = centre(c % nx, c / nx);
                d.inside(p)
            })
            .collect();
        let mut index = vec![NONE; nx * ny];
        let mut cells = Vec::new();
        for c in 0..nx * ny {
            let p = centre(c % nx, c / nx);
            if inside[c] && !d.blocked(p) {
                index[c] = cells.len() as u32;
                cells.push((c % nx, c / nx));
            }
        }
        if cells.is_empty() {
            return Err(Error::invalid("domain has no cells at this resolution"));
        }
        let rows: Vec<([u32; 4], f64, f64, f64)> = cells
            .par_iter()
            .map(|&(i, j)| {
                let p = centre(i, j);
                let mut nb = [NONE; 4];
                let (mut diag, mut rhs, mut sq) = (0.0, 0.0, 0.0);
                let steps: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
                for (k, (di, dj)) in steps.iter().enumerate() {
                    let (ii, jj) = (i as isize + di, j as isize + dj);
                    let q = [p[0] + *di as f64 * h, p[1] + *dj as f64 * h];
                    let in_range = ii >= 0 && jj >= 0 && (ii as usize) < nx && (jj as usize) < ny;
                    let qc = if in_range { Some(jj as usize * nx + ii as usize) } else { None };
                    if let Some(qc) = qc.filter(|&qc| inside[qc]) {
                        if index[qc] != NONE {
                            nb[k] = index[qc];
                            diag += 1.0;
                        }
                        continue;
                    }
                    let (t, label) = d.crossing(p, q);
                    let g = match label {
                        ArcLabel::A => 0.0,
                        ArcLabel::B => 1.0,
                        ArcLabel::Free => continue,
                    };
                    let c = 1.0 / t.max(1e-3);
                    diag += c;
                    rhs += c * g;
                    sq += c * g * g;
                }
                (nb, diag, rhs, sq)
            })
            .collect();
        let mut neighbors = Vec::with_capacity(rows.len());
        let mut diag = Vec::with_capacity(rows.len());
        let mut rhs = Vec::with_capacity(rows.len());
        let mut bc_sq = Vec::with_capacity(rows.len());
        for (nb, dg, r, s) in rows {
            neighbors.push(nb);
            diag.push(dg);
            rhs.push(r);
            bc_sq.push(s);
        }
        Ok(Self { origin, h, nx, ny, index, cells, neighbors, diag, rhs, bc_sq })
    }

    pub fn unknowns(&self) -> usize {
        self.cells.len()
    }

    pub fn centre(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.cells[k];
        [self.origin[0] + (i as f64 + 0.5) * self.h, self.origin[1] + (j as f64 + 0.5) * self.h]
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut s = self.diag[i] * x[i];
            for &n in &self.neighbors[i] {
                if n != NONE {
                    s -= x[n as usize];
                }
            }
            *yi = s;
        });
    }

    /// Discrete Dirichlet energy of `u`, each interior face counted once.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let parts: Vec<f64> = (0..u.len())
            .into_par_iter()
            .with_min_len(4096)
            .map(|i| {
                let mut e = 0.0;
                let mut inner = 0.0;
                for &n in &self.neighbors[i] {
                    if n != NONE {
                        inner += 1.0;
                        if (n as usize) > i {
                            e += (u[i] - u[n as usize]).powi(2);
                        }
                    }
                }
                let c = self.diag[i] - inner;
                e + c * u[i] * u[i] - 2.0 * self.rhs[i] * u[i] + self.bc_sq[i]
            })
            .collect();
        ordered_sum(&parts)
    }
}

fn ordered_sum(v: &[f64]) -> f64 {
    v.chunks(4096).map(|c| c.iter().sum::<f64>()).fold(0.0, |a, b| a + b)
}

/// Dot product with a fixed reduction order, so results do not depend on
/// thread scheduling.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let parts: Vec<f64> = a.par_chunks(4096).zip(b.par_chunks(4096)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum()).collect();
    parts.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 200_000 }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub grid: Grid,
    pub potential: Vec<f64>,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Jacobi-preconditioned conjugate gradients on the grid system.
/// `residual` is ‖b − Au‖ / ‖b‖.
pub fn solve(d: &GridDomain, n: usize, opts: SolverOptions) -> Result<Solution> {
    let grid = Grid::build(d, n)?;
    let m = grid.unknowns();
    let inv: Vec<f64> = grid.diag.iter().map(|&x| if x > 0.0 { 1.0 / x } else { 0.0 }).collect();
    let b = &grid.rhs;
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Err(Error::invalid("no Dirichlet data reaches the grid"));
    }
    let mut x = vec![0.0; m];
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; m];
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    let mut it = 0;
    while it < opts.max_iterations {
        res = dot(&r, &r).sqrt() / bnorm;
        if res <= opts.tolerance {
            break;
        }
        grid.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        z.par_iter_mut().zip(&r).zip(&inv).for_each(|((zi, ri), di)| *zi = ri * di);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        it += 1;
    }
    if res > opts.tolerance {
        return Err(Error::NonConvergence { residual: res, iterations: it });
    }
    grid.apply(&x, &mut ap);
    let true_res = ap.iter().zip(b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt() / bnorm;
    let energy = grid.energy(&x);
    Ok(Solution { grid, potential: x, energy, residual: true_res, iterations: it })
}

impl Solution {
    /// Cell-centred gradient magnitude of the potential. This metric is
    /// admissible for curves joining A to B in the continuum limit, and its
    /// area equals the energy.
    pub fn gradient_metric(&self) -> Vec<f64> {
        let g = &self.grid;
        (0..g.unknowns())
            .map(|k| {
                let (i, j) = g.cells[k];
                let at = |ii: isize, jj: isize| -> Option<f64> {
                    if ii < 0 || jj < 0 || ii as usize >= g.nx || jj as usize >= g.ny {
                        return None;
                    }
                    let idx = g.index[jj as usize * g.nx + ii as usize];
                    (idx != NONE).then(|| self.potential[idx as usize])
                };
                let u = self.potential[k];
                let d = |a: Option<f64>, b: Option<f64>| match (a, b) {
                    (Some(a), Some(b)) => (a - b) / (2.0 * g.h),
                    (Some(a), None) => (a - u) / g.h,
                    (None, Some(b)) => (u - b) / g.h,
                    (None, None) => 0.0,
                };
                let (i, j) = (i as isize, j as isize);
                d(at(i + 1, j), at(i - 1, j)).hypot(d(at(i, j + 1), at(i, j - 1)))
            })
            .collect()
    }

    /// Heat map of the potential, downsampled to at most `max_px` blocks per side.
    pub fn to_svg(&self, max_px: usize) -> String {
        let g = &self.grid;
        let step = (g.nx.max(g.ny) + max_px - 1) / max_px.max(1);
        let (bw, bh) = ((g.nx + step - 1) / step, (g.ny + step - 1) / step);
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {bw} {bh}\" width=\"{}\" height=\"{}\">\n",
            bw * 4,
            bh * 4
        );
        for bj in 0..bh {
            for bi in 0..bw {
                let (mut s, mut c) = (0.0, 0);
                for j in bj * step..((bj + 1) * step).min(g.ny) {
                    for i in bi * step..((bi + 1) * step).min(g.nx) {
                        let idx = g.index[j * g.nx + i];
                        if idx != NONE {
                            s += self.potential[idx as usize];
                            c += 1;
                        }
                    }
                }
                if c == 0 {
                    continue;
                }
                let v = (s / c as f64).clamp(0.0, 1.0);
                let (r, b) = ((255.0 * v) as u8, (255.0 * (1.0 - v)) as u8);
                out += &format!(
                    "<rect x=\"{bi}\" y=\"{}\" width=\"1\" height=\"1\" fill=\"rgb({r},64,{b})\"/>\n",
                    bh - 1 - bj
                );
            }
        }
        out + "</svg>\n"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusResult {
    /// Richardson-extrapolated extremal length.
    pub modulus: f64,
    pub coarse: f64,
    pub fine: f64,
    pub grid_sizes: [[usize; 2]; 2],
    pub residual: f64,
    pub iterations: usize,
    /// Area of the gradient metric on the finer grid.
    pub metric_area: f64,
}

/// Extremal length of the curves joining A to B, from solves at
/// `resolution / 2` and `resolution` combined as `(4 m_fine − m_coarse) / 3`.
pub fn modulus(d: &GridDomain) -> Result<ModulusResult> {
    modulus_with(d, SolverOptions::default())
}

pub fn modulus_with(d: &GridDomain, opts: SolverOptions) -> Result<ModulusResult> {
    d.validate()?;
    let coarse = solve(d, d.resolution / 2, opts)?;
    let fine = solve(d, d.resolution, opts)?;
    let (mc, mf) = (1.0 / coarse.energy, 1.0 / fine.energy);
    let metric = fine.gradient_metric();
    let area = metric.iter().map(|r| r * r).sum::<f64>() * fine.grid.h * fine.grid.h;
    Ok(ModulusResult {
        modulus: (4.0 * mf - mc) / 3.0,
        coarse: mc,
        fine: mf,
        grid_sizes: [[coarse.grid.nx, coarse.grid.ny], [fine.grid.nx, fine.grid.ny]],
        residual: coarse.residual.max(fine.residual),
        iterations: coarse.iterations + fine.iterations,
        metric_area: area,
    })
}

/// Extremal length of a concentric ring `r0 < |z| < r1`, computed in
/// closed form.
pub fn ring_modulus(r0: f64, r1: f64) -> f64 {
    (r1 / r0).ln() / (2.0 * std::f64::consts::PI)
}

/// Upper bound for the ring separating {0, 1} from [c, ∞).
pub fn ann_bound(c: f64) -> Result<f64> {
    if !(c > 1.0) {
        return Err(Error::invalid("c must exceed 1"));
    }
    Ok((16.0 * c).ln() / (2.0 * std::f64::consts::PI))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcisionResult {
    pub radius: f64,
    pub ratio: f64,
    pub base: ModulusResult,
    pub excised: ModulusResult,
}

/// Ratio of the extremal length with curves restricted to avoid the disk
/// `B_r(center)` to the unrestricted one; `r = 0` gives exactly 1.
///
/// Both lengths are taken on the same fine grid without extrapolation: the
/// staircase disk differs between grid levels, and removing cells from one
/// grid can only lower the discrete energy, so the ratio stays at least 1
/// and is monotone in `r`.
pub fn excised_ratio(q: &GridDomain, center: [f64; 2], r: f64) -> Result<ExcisionResult> {
    if r < 0.0 {
        return Err(Error::invalid("radius must be nonnegative"));
    }
    let plain = GridDomain { excision: None, ..q.clone() };
    let base = modulus(&plain)?;
    if r == 0.0 {
        return Ok(ExcisionResult { radius: 0.0, ratio: 1.0, excised: base.clone(), base });
    }
    let excised = modulus(&plain.with_excision(center, r)?)?;
    Ok(ExcisionResult { radius: r, ratio: excised.fine / base.fine, base, excised })
}

pub const QS_A: f64 = 0.228;

/// Quasisymmetry constant `e^{A(m−1)}` for a `m`-quasiconformal map.
pub fn qs_constant(m: f64) -> Result<f64> {
    if !(m >= 1.0) {
        return Err(Error::invalid("m must be at least 1"));
    }
    Ok((QS_A * (m - 1.0)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KoebeReport {
    pub r: f64,
    pub diam: f64,
    pub delta: f64,
    pub derivative_at_zero: f64,
    pub dist: f64,
    /// `diam / (r · dist)`.
    pub constant: f64,
    pub derivative_bound_holds: bool,
    pub diameter_bound_holds: bool,
}

/// Diameter of a closed curve given by samples.
pub fn diameter(pts: &[Complex64]) -> f64 {
    pts.par_iter()
        .map(|a| pts.iter().map(|b| (a - b).norm()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

/// Koebe-type checks for `φ(B_r)`: `|φ′(0)| ≤ 4δ` and `diam φ(B_r) < 16 r δ`
/// with `δ = dist(0, ∂φ(D))`. `∂φ(D)` is sampled as the image of the circle
/// of radius `1 − 1e−6`, which underestimates `δ`.
pub fn koebe_checks(phi: &UnivalentSeries, r: f64) -> Result<KoebeReport> {
    if !(r > 0.0 && r < 0.5) {
        return Err(Error::invalid("r must lie in (0, 1/2)"));
    }
    phi.check_injective(1.0 - 1e-6)?;
    let n = 2048;
    let circle = |rad: f64| -> Vec<Complex64> {
        (0..n).map(|k| phi.eval(Complex64::from_polar(rad, 2.0 * std::f64::consts::PI * k as f64 / n as f64))).collect()
    };
    let inner = circle(r);
    let outer = circle(1.0 - 1e-6);
    let diam = diameter(&inner);
    let delta = outer.iter().map(|w| w.norm()).fold(f64::INFINITY, f64::min);
    let dist = inner
        .par_iter()
        .map(|a| outer.iter().map(|b| (a - b).norm()).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min);
    let dp = phi.derivative(Complex64::new(0.0, 0.0)).norm();
    Ok(KoebeReport {
        r,
        diam,
        delta,
        derivative_at_zero: dp,
        dist,
        constant: diam / (r * dist),
        derivative_bound_holds: dp <= 4.0 * delta * (1.0 + 1e-6),
        diameter_bound_holds: diam < 16.0 * r * delta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub k_measured: f64,
    pub source: ModulusResult,
    pub image: ModulusResult,
    pub ratio: f64,
    pub slack: f64,
    pub within_bounds: bool,
}

/// Ratio of image to source extremal length, checked against
/// `[1/K, K]` widened by `slack` for grid error. `K` is measured over the
/// bounding box of the source polygon.
pub fn qc_distortion_of_modulus(f: &PlanarC1Map, q: &GridDomain, slack: f64) -> Result<DistortionReport> {
    let Shape::Polygon { vertices, .. } = &q.shape else {
        return Err(Error::invalid("source must be a polygon"));
    };
    let b = q.bbox();
    let dom = Domain::rect(b[0], b[1], b[2], b[3]);
    let k = scan(&f.with_domain(dom), 96, 96)?.k_max;
    let image = q.mapped(f, 256.max(4 * q.resolution / vertices.len().max(1)))?;
    let source = modulus(q)?;
    let im = modulus(&image)?;
    let ratio = im.modulus / source.modulus;
    let within = ratio >= 1.0 / k / (1.0 + slack) && ratio <= k * (1.0 + slack);
    Ok(DistortionReport { k_measured: k, source, image: im, ratio, slack, within_bounds: within })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterReport {
    pub r: f64,
    pub eps: f64,
    pub diam: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Image-diameter check for a disk map that is `(1+ε)`-quasiconformal on
/// `r ≤ |z| ≤ 1`: `diam f(B_r) ≤ 16 r^{1−ε}`, with `ε` measured by a
/// dilatation scan of the annulus.
pub fn qconf_diameter(f: &PlanarC1Map, r: f64) -> Result<DiameterReport> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::invalid("r must lie in (0, 1)"));
    }
    let ann = Domain::annular_sector(Complex64::new(0.0, 0.0), r, 1.0, 0.0, 2.0 * std::f64::consts::PI);
    let k = scan(&f.with_domain(ann), 64, 256)?.k_max;
    let eps = k - 1.0;
    let n = 2048;
    let pts: Vec<Complex64> = (0..n)
        .map(|i| f.eval(Complex64::from_polar(r, 2.0 * std::f64::consts::PI * i as f64 / n as f64)))
        .collect();
    let diam = diameter(&pts);
    let bound = 16.0 * r.powf(1.0 - eps);
    Ok(DiameterReport { r, eps, diam, bound, holds: diam <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_is_exact() {
        let m = modulus(&GridDomain::rect(1.0, 1.0, true, 32)).unwrap();
        assert!((m.fine - 1.0).abs() < 1e-9, "{m:?}");
    }

    #[test]
    fn conjugate_swaps_arcs() {
        let d = GridDomain::rect(2.0, 1.0, true, 8).conjugate().unwrap();
        let Shape::Polygon { labels, .. } = d.shape else { unreachable!() };
        assert_eq!(labels, vec![ArcLabel::B, ArcLabel::Free, ArcLabel::A, ArcLabel::Free]);
    }

    #[test]
    fn excision_must_avoid_arcs() {
        let d = GridDomain::rect(1.0, 1.0, true, 16);
        assert!(d.with_excision([0.05, 0.5], 0.1).is_err());
    }

    #[test]
    fn qs_values() {
        assert_eq!(qs_constant(1.0).unwrap(), 1.0);
        assert!(qs_constant(0.5).is_err());
    }
}
