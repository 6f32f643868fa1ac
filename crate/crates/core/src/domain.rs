//! Dirichlet fundamental domains in the Klein projective model.
//!
//! In Klein coordinates geodesics are straight chords and the perpendicular
//! bisector between two points is the zero set of a Minkowski-linear form,
//! so the Dirichlet domain about a basepoint is computed by ordinary convex
//! half-plane clipping.  Ideal vertices (cusps) land on the unit circle.

use crate::hyperbolic::{minkowski, HPoint, Isometry};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("group ball too small: domain does not close up (vertex at Klein radius {0})")]
    Unbounded(f64),
    #[error("domain degenerated to an empty polygon")]
    Empty,
}

/// A vertex of the clipped polygon.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DomainVertex {
    pub klein: [f64; 2],
    /// Vertices within numerical reach of the unit circle are ideal (cusps).
    pub ideal: bool,
}

/// One side of the Dirichlet polygon, the bisector of `p0` and `pairing(p0)`.
#[derive(Debug, Clone, Serialize)]
pub struct DomainSide {
    /// Index of the side-pairing element in the element list handed in.
    pub element: usize,
    /// Inward unit (spacelike) Minkowski normal of the bisector.
    pub normal: [f64; 3],
    /// Vertex indices (start, end) in counterclockwise order.
    pub ends: (usize, usize),
}

/// Dirichlet fundamental domain: a convex hyperbolic polygon with
/// side-pairing tags.
#[derive(Debug, Clone, Serialize)]
pub struct DirichletDomain {
    pub basepoint: HPoint,
    pub vertices: Vec<DomainVertex>,
    pub sides: Vec<DomainSide>,
    /// Hyperbolic area by angle defect.
    pub area: f64,
}

/// Vertices closer than this (in Klein units) to the unit circle are ideal.
const IDEAL_TOL: f64 = 1e-7;

struct HalfPlane {
    /// Points with `w0 - w1 k1 - w2 k2 >= 0` are kept.
    w: [f64; 3],
}

impl HalfPlane {
    fn eval(&self, k: [f64; 2]) -> f64 {
        self.w[0] - self.w[1] * k[0] - self.w[2] * k[1]
    }
}

/// Computes the Dirichlet domain of the basepoint with respect to the given
/// group elements (the identity must not be among them).  The element list
/// must contain every side pairing; sufficiency is certified by comparing
/// `area` with the Gauss-Bonnet value.
pub fn dirichlet_domain(
    basepoint: &HPoint,
    elements: &[Isometry],
) -> Result<DirichletDomain, DomainError> {
    let p0 = basepoint.to_hyperboloid();
    // Initial polygon: a square strictly containing the Klein disc.
    let mut poly: Vec<[f64; 2]> = vec![[-1.2, -1.2], [1.2, -1.2], [1.2, 1.2], [-1.2, 1.2]];
    let mut srcs: Vec<Option<usize>> = vec![None; 4]; // side i: poly[i] -> poly[i+1]

    // Clip by bisectors sorted by displacement so early planes do most work.
    let mut order: Vec<(f64, usize)> = elements
        .iter()
        .enumerate()
        .map(|(i, g)| (g.displacement(basepoint), i))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    for (_, idx) in order {
        let g = &elements[idx];
        let gp = g.apply(basepoint).to_hyperboloid();
        let w = [gp[0] - p0[0], gp[1] - p0[1], gp[2] - p0[2]];
        // Degenerate when g fixes the basepoint; skip (cannot happen for a
        // torsion-free group).
        if w.iter().map(|x| x.abs()).sum::<f64>() < 1e-14 {
            continue;
        }
        let hp = HalfPlane { w };
        // Sutherland-Hodgman clip.
        let n = poly.len();
        if n == 0 {
            return Err(DomainError::Empty);
        }
        let vals: Vec<f64> = poly.iter().map(|&k| hp.eval(k)).collect();
        if vals.iter().all(|&v| v >= 0.0) {
            continue;
        }
        let mut new_poly = Vec::with_capacity(n + 1);
        let mut new_srcs = Vec::with_capacity(n + 1);
        for i in 0..n {
            let j = (i + 1) % n;
            let (vi, vj) = (vals[i], vals[j]);
            if vi >= 0.0 {
                new_poly.push(poly[i]);
                new_srcs.push(srcs[i]);
            }
            if (vi >= 0.0) != (vj >= 0.0) {
                let t = vi / (vi - vj);
                let k = [
                    poly[i][0] + t * (poly[j][0] - poly[i][0]),
                    poly[i][1] + t * (poly[j][1] - poly[i][1]),
                ];
                if vi >= 0.0 {
                    // Leaving: the new edge from this crossing belongs to hp.
                    new_poly.push(k);
                    new_srcs.push(Some(idx));
                } else {
                    // Entering: edge resumes the old side.
                    new_poly.push(k);
                    new_srcs.push(srcs[i]);
                }
            }
        }
        poly = new_poly;
        srcs = new_srcs;
    }

    if poly.len() < 3 {
        return Err(DomainError::Empty);
    }

    // Any surviving square side means the ball did not close the domain.
    for (i, s) in srcs.iter().enumerate() {
        if s.is_none() {
            let r = (poly[i][0].powi(2) + poly[i][1].powi(2)).sqrt();
            return Err(DomainError::Unbounded(r));
        }
    }
    // Vertices beyond the closed disc also indicate an unclosed domain.
    for &k in &poly {
        let r = (k[0] * k[0] + k[1] * k[1]).sqrt();
        if r > 1.0 + IDEAL_TOL {
            return Err(DomainError::Unbounded(r));
        }
    }

    // Merge collinear consecutive sides from the same element (clipping can
    // introduce duplicate crossings).
    let mut vertices = Vec::new();
    let mut side_elems = Vec::new();
    let n = poly.len();
    for i in 0..n {
        let prev = (i + n - 1) % n;
        if srcs[prev] == srcs[i] {
            continue;
        }
        vertices.push(poly[i]);
        side_elems.push(srcs[i].unwrap());
    }
    // Drop zero-length sides: near-ideal bisectors can cross pairwise within
    // rounding of a common ideal point, leaving degenerate slivers that would
    // each inflate the angle-defect area by pi.
    let mut i = 0;
    while vertices.len() > 2 && i < vertices.len() {
        let n = vertices.len();
        let j = (i + 1) % n;
        let d = ((vertices[i][0] - vertices[j][0]).powi(2)
            + (vertices[i][1] - vertices[j][1]).powi(2))
        .sqrt();
        if d < 1e-9 {
            // Side i (vertex i -> vertex i+1) is degenerate.  Keep the
            // earlier vertex; in the wrap-around case keep vertex 0 so the
            // side/vertex index pairing stays intact.
            side_elems.remove(i);
            vertices.remove(if j == 0 { i } else { j });
        } else {
            i += 1;
        }
    }
    if vertices.len() < 3 {
        return Err(DomainError::Empty);
    }

    let m = vertices.len();
    let dverts: Vec<DomainVertex> = vertices
        .iter()
        .map(|&k| {
            let r = (k[0] * k[0] + k[1] * k[1]).sqrt();
            DomainVertex { klein: k, ideal: r >= 1.0 - IDEAL_TOL }
        })
        .collect();

    // Inward unit normals per side.
    let normals: Vec<[f64; 3]> = side_elems
        .iter()
        .map(|&idx| {
            let gp = elements[idx].apply(basepoint).to_hyperboloid();
            let w = [gp[0] - p0[0], gp[1] - p0[1], gp[2] - p0[2]];
            let norm = (-minkowski(&w, &w)).sqrt();
            [w[0] / norm, w[1] / norm, w[2] / norm]
        })
        .collect();

    // Area by angle defect: (m - 2) pi - sum of interior angles; ideal
    // vertices contribute zero.
    let mut angle_sum = 0.0;
    for i in 0..m {
        if dverts[i].ideal {
            continue;
        }
        let prev = (i + m - 1) % m;
        // Interior angle between side `prev` (ending at vertex i) and side
        // `i` (starting at vertex i): pi - angle between inward normals.
        let c = -minkowski(&normals[prev], &normals[i]);
        let c = c.clamp(-1.0, 1.0);
        angle_sum += std::f64::consts::PI - c.acos();
    }
    let area = (m as f64 - 2.0) * std::f64::consts::PI - angle_sum;

    let sides = (0..m)
        .map(|i| DomainSide {
            element: side_elems[i],
            normal: normals[i],
            ends: (i, (i + 1) % m),
        })
        .collect();

    Ok(DirichletDomain { basepoint: *basepoint, vertices: dverts, sides, area })
}

impl DirichletDomain {
    /// Signed margin of a Klein point: nonnegative iff inside the domain.
    pub fn margin(&self, klein: [f64; 2]) -> f64 {
        let x = [1.0, klein[0], klein[1]];
        self.sides
            .iter()
            .map(|s| minkowski(&x, &s.normal))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &HPoint, tol: f64) -> bool {
        self.margin(p.to_klein()) >= -tol
    }

    /// Ideal vertices in upper-half-plane boundary coordinates.
    pub fn ideal_points(&self) -> Vec<f64> {
        self.vertices
            .iter()
            .filter(|v| v.ideal)
            .map(|v| {
                // Klein boundary point -> Poincare boundary point -> UHP real
                // axis via z = i(1+w)/(1-w); for |w| = 1 this is real.
                let (k1, k2) = (v.klein[0], v.klein[1]);
                let norm = (k1 * k1 + k2 * k2).sqrt();
                let (u, vv) = (k1 / norm, k2 / norm);
                // x = 2v / |1-w|^2 restricted to the circle: the Cayley image
                // of (u, v) on the unit circle is x = v / (1 - u).
                vv / (1.0 - u)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::Isometry;
    use crate::pants::PantsPiece;

    /// Words of bounded length over a symmetric generating set, deduplicated.
    fn ball(gens: &[Isometry], depth: usize) -> Vec<Isometry> {
        let mut all: Vec<Isometry> = vec![Isometry::identity()];
        let mut frontier = vec![Isometry::identity()];
        let mut sym: Vec<Isometry> = Vec::new();
        for g in gens {
            sym.push(*g);
            sym.push(g.inverse());
        }
        for _ in 0..depth {
            let mut next = Vec::new();
            for f in &frontier {
                for s in &sym {
                    let h = f.compose(s);
                    if all.iter().chain(next.iter()).all(|k| !k.approx_eq(&h, 1e-7)) {
                        next.push(h);
                    }
                }
            }
            all.extend(next.iter().cloned());
            frontier = next;
        }
        all.retain(|g| !g.is_identity(1e-9));
        all
    }

    #[test]
    fn thrice_punctured_sphere_area() {
        // The pants with three cusps has area 2 pi; its Dirichlet domain is
        // an ideal polygon.
        let piece = PantsPiece::build([0.0, 0.0, 0.0]).unwrap();
        let gens = piece.generators;
        let elements = ball(&gens, 4);
        let p0 = HPoint { x: 0.0173, y: 1.07 };
        let dom = dirichlet_domain(&p0, &elements).unwrap();
        assert!(
            (dom.area - 2.0 * std::f64::consts::PI).abs() < 1e-8,
            "area {}",
            dom.area
        );
        assert!(dom.vertices.iter().any(|v| v.ideal));
        assert!(dom.contains(&p0, 0.0));
    }

    #[test]
    fn one_holed_torus_style_group_closes() {
        // Pants [2, 2, 2] alone is not cocompact, so its domain must report
        // as unbounded even with a deep ball.
        let piece = PantsPiece::build([2.0, 2.0, 2.0]).unwrap();
        let elements = ball(&piece.generators, 4);
        let p0 = HPoint { x: 0.0173, y: 1.07 };
        match dirichlet_domain(&p0, &elements) {
            Err(DomainError::Unbounded(_)) => {}
            other => panic!("expected unbounded, got {other:?}"),
        }
    }
}

