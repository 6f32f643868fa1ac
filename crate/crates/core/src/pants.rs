//! Pants graphs, Fenchel-Nielsen coordinates, and the geometric realization
//! of a single hyperbolic pair of pants.
//!
//! A pair of pants with boundary half-lengths `a_i = l_i / 2` is realized as
//! the discrete free group `<A, B>` with boundary holonomies
//! `delta_0 = A`, `delta_1 = B`, `delta_2 = (A B)^{-1}` normalized by
//! `tr delta_i = -2 cosh(a_i)`; a zero length marks a cusp (parabolic
//! boundary, trace -2).  Each geodesic boundary slot carries a frame mapping
//! the imaginary axis onto its axis, used later for cuff gluings.

use crate::hyperbolic::{GeometryError, HPoint, Isometry, IsometryClass};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PantsError {
    #[error("cuff length {0} is not positive and finite")]
    InvalidCuff(f64),
    #[error("slot ({pants}, {slot}) is {found}, expected one edge reference or a cusp marker")]
    BadSlot { pants: usize, slot: usize, found: String },
    #[error("edge {0} endpoints do not match its slots")]
    BadEdge(usize),
    #[error("pants graph is not connected")]
    Disconnected,
    #[error("no pants decomposition exists for g = {g}, n = {n} (g + 2n < 3)")]
    TooSmall { g: usize, n: usize },
    #[error("Fenchel-Nielsen data has {got} entries for {want} edges")]
    CoordinateMismatch { got: usize, want: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One of the three boundary slots of a pants piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    /// Unmatched slot: an end of the surface.
    Cusp,
    /// Matched with the other end of internal edge `e`.
    Edge(usize),
}

/// Trivalent gluing pattern: `pants[v][k]` is slot `k` of pants `v`; each
/// internal edge records its two (pants, slot) ends (possibly on the same
/// pants).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PantsGraph {
    pub pants: Vec<[Slot; 3]>,
    pub edges: Vec<[(usize, usize); 2]>,
}

impl PantsGraph {
    pub fn validate(&self) -> Result<(), PantsError> {
        for (e, ends) in self.edges.iter().enumerate() {
            for &(v, k) in ends {
                if v >= self.pants.len() || k >= 3 || self.pants[v][k] != Slot::Edge(e) {
                    return Err(PantsError::BadEdge(e));
                }
            }
            if ends[0] == ends[1] {
                return Err(PantsError::BadEdge(e));
            }
        }
        for (v, slots) in self.pants.iter().enumerate() {
            for (k, s) in slots.iter().enumerate() {
                if let Slot::Edge(e) = s {
                    if *e >= self.edges.len() || !self.edges[*e].contains(&(v, k)) {
                        return Err(PantsError::BadSlot {
                            pants: v,
                            slot: k,
                            found: format!("{s:?}"),
                        });
                    }
                }
            }
        }
        // Connectivity.
        if !self.pants.is_empty() {
            let mut seen = vec![false; self.pants.len()];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for s in &self.pants[v] {
                    if let Slot::Edge(e) = s {
                        for &(w, _) in &self.edges[*e] {
                            if !seen[w] {
                                seen[w] = true;
                                stack.push(w);
                            }
                        }
                    }
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(PantsError::Disconnected);
            }
        }
        let (g, n) = (self.genus(), self.cusps());
        if 2 * g + n < 3 {
            return Err(PantsError::TooSmall { g, n });
        }
        debug_assert_eq!(self.pants.len(), 2 * g + n - 2);
        debug_assert_eq!(self.edges.len(), 3 * g + n - 3);
        Ok(())
    }

    pub fn cusps(&self) -> usize {
        self.pants.iter().flatten().filter(|s| **s == Slot::Cusp).count()
    }

    /// Genus from Euler characteristic: each pants has chi = -1, so
    /// `2 - 2g - n = -|pants|`.
    pub fn genus(&self) -> usize {
        let chi = -(self.pants.len() as i64);
        let g2 = 2 - chi - self.cusps() as i64;
        (g2 / 2) as usize
    }

    /// The canonical trivalent graph used for generated surfaces: a chain of
    /// `2g - 2 + n` pants; leftover slots take the `n` cusps first and the
    /// remaining `2g` are paired consecutively.
    pub fn canonical(g: usize, n: usize) -> Result<PantsGraph, PantsError> {
        if 2 * g + n < 3 {
            return Err(PantsError::TooSmall { g, n });
        }
        let v = 2 * g + n - 2;
        let mut pants = vec![[Slot::Cusp; 3]; v];
        let mut edges = Vec::new();
        // Chain edges: slot 1 of pants i to slot 0 of pants i + 1.
        for i in 0..v - 1 {
            let e = edges.len();
            edges.push([(i, 1), (i + 1, 0)]);
            pants[i][1] = Slot::Edge(e);
            pants[i + 1][0] = Slot::Edge(e);
        }
        // Remaining free slots in (pants, slot) order.
        let mut free = Vec::new();
        for (i, slots) in pants.iter().enumerate() {
            for k in 0..3 {
                if slots[k] == Slot::Cusp {
                    free.push((i, k));
                }
            }
        }
        debug_assert_eq!(free.len(), v + 2);
        // First n stay cusps; the rest pair up consecutively.
        for pair in free[n..].chunks(2) {
            let e = edges.len();
            edges.push([pair[0], pair[1]]);
            pants[pair[0].0][pair[0].1] = Slot::Edge(e);
            pants[pair[1].0][pair[1].1] = Slot::Edge(e);
        }
        let graph = PantsGraph { pants, edges };
        graph.validate()?;
        debug_assert_eq!(graph.genus(), g);
        debug_assert_eq!(graph.cusps(), n);
        Ok(graph)
    }
}

/// Cuff length and twist per internal edge, aligned with `PantsGraph::edges`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FnCoordinates {
    pub lengths: Vec<f64>,
    pub twists: Vec<f64>,
}

impl FnCoordinates {
    pub fn validate(&self, graph: &PantsGraph) -> Result<(), PantsError> {
        if self.lengths.len() != graph.edges.len() || self.twists.len() != graph.edges.len() {
            return Err(PantsError::CoordinateMismatch {
                got: self.lengths.len().min(self.twists.len()),
                want: graph.edges.len(),
            });
        }
        for &l in &self.lengths {
            if !(l.is_finite() && l > 0.0) {
                return Err(PantsError::InvalidCuff(l));
            }
        }
        Ok(())
    }

    pub fn uniform(graph: &PantsGraph, length: f64, twist: f64) -> FnCoordinates {
        FnCoordinates {
            lengths: vec![length; graph.edges.len()],
            twists: vec![twist; graph.edges.len()],
        }
    }
}

/// Seam length between cuffs `i` and `j` of a pants with half-lengths
/// `a = l / 2` from the right-angled hexagon relation:
/// `cosh s = (cosh a_k + cosh a_i cosh a_j) / (sinh a_i sinh a_j)`.
pub fn seam_length(l_i: f64, l_j: f64, l_k: f64) -> f64 {
    let (ai, aj, ak) = (l_i / 2.0, l_j / 2.0, l_k / 2.0);
    ((ak.cosh() + ai.cosh() * aj.cosh()) / (ai.sinh() * aj.sinh())).acosh()
}

/// Geometric realization of one pair of pants.
#[derive(Debug, Clone)]
pub struct PantsPiece {
    /// Boundary lengths per slot; 0 marks a cusp.
    pub boundary_lengths: [f64; 3],
    /// Boundary holonomies with `delta[0] delta[1] delta[2] = 1`; geodesic
    /// slots are hyperbolic with translation length `l_i`, cusp slots are
    /// parabolic.
    pub delta: [Isometry; 3],
    /// Per geodesic slot, the frame taking the imaginary axis (upward) onto
    /// the boundary axis; `None` for cusps.
    pub frames: [Option<Isometry>; 3],
    /// The two free generators of the pants group (`delta` of the first two
    /// rotated slots).
    pub generators: [Isometry; 2],
}

impl PantsPiece {
    /// Builds the pants from three boundary lengths (0 = cusp).  This is the
    /// uniform constructor: cusps are the `l -> 0` degenerate limit.
    pub fn build(lengths: [f64; 3]) -> Result<PantsPiece, PantsError> {
        for &l in &lengths {
            if !(l.is_finite() && l >= 0.0) {
                return Err(PantsError::InvalidCuff(l));
            }
        }
        // Rotate a geodesic slot to the front when one exists, so the first
        // holonomy can be put in diagonal normal form.
        let rot = (0..3).find(|&k| lengths[k] > 0.0).unwrap_or(0);
        let l = [lengths[rot], lengths[(rot + 1) % 3], lengths[(rot + 2) % 3]];
        let (a1, a2, a3) = (l[0] / 2.0, l[1] / 2.0, l[2] / 2.0);

        let (mat_a, mat_b) = if a1 > 0.0 {
            // A = -diag(e^{a1}, e^{-a1}); solve for B with the prescribed
            // traces tr B = -2 cosh a2, tr AB = -2 cosh a3.
            let p = (a3.cosh() + a2.cosh() * (-a1).exp()) / a1.sinh();
            let s = -2.0 * a2.cosh() - p;
            let qr = p * s - 1.0;
            debug_assert!(qr < 0.0, "axes of A and B must be disjoint");
            let q = (-qr).sqrt();
            let r = qr / q;
            let mat_a = Isometry { a: -a1.exp(), b: 0.0, c: 0.0, d: -(-a1).exp() };
            let mat_b = Isometry { a: p, b: q, c: r, d: s };
            (mat_a, mat_b)
        } else {
            // Thrice-punctured sphere: the standard level-2 congruence pair.
            let mat_a = Isometry { a: -1.0, b: -2.0, c: 0.0, d: -1.0 };
            let mat_b = Isometry { a: -1.0, b: 0.0, c: 2.0, d: -1.0 };
            (mat_a, mat_b)
        };
        let mat_c = mat_b.inverse().compose(&mat_a.inverse());

        let mut delta = [Isometry::identity(); 3];
        let rotated = [mat_a, mat_b, mat_c];
        for k in 0..3 {
            delta[(rot + k) % 3] = rotated[k];
        }
        let mut frames = [None; 3];
        for k in 0..3 {
            if lengths[k] > 0.0 {
                frames[k] = Some(
                    delta[k]
                        .axis_frame_of()
                        .expect("geodesic boundary slot has hyperbolic holonomy"),
                );
            }
        }
        let piece = PantsPiece {
            boundary_lengths: lengths,
            delta,
            frames,
            generators: [mat_a, mat_b],
        };
        piece.check_traces()?;
        Ok(piece)
    }

    fn check_traces(&self) -> Result<(), PantsError> {
        for k in 0..3 {
            let l = self.boundary_lengths[k];
            let (tl, class) = self.delta[k].translation_length();
            if l > 0.0 {
                if class != IsometryClass::Hyperbolic || (tl - l).abs() > 1e-9 * (1.0 + l) {
                    return Err(PantsError::InvalidCuff(l));
                }
            } else if class != IsometryClass::Parabolic {
                return Err(PantsError::InvalidCuff(l));
            }
        }
        Ok(())
    }

    /// Which side of the slot axis (in frame coordinates, sign of x) the
    /// pants interior lies on.  The construction keeps this uniform; gluing
    /// relies on it.
    pub fn interior_side(&self, slot: usize) -> Option<f64> {
        let frame = self.frames[slot]?;
        let inv = frame.inverse();
        // Probe with the other two boundary objects: their axis endpoints or
        // parabolic fixed points, pulled back to frame coordinates, all lie
        // on the interior side.
        let mut side = 0.0;
        for k in 0..3 {
            if k == slot {
                continue;
            }
            let probes: Vec<Option<f64>> = match self.delta[k].axis_endpoints() {
                Some((u, v)) => vec![u, v],
                None => vec![self.delta[k].parabolic_fixed_point().flatten()],
            };
            for p in probes {
                let q = inv.apply_boundary(p);
                if let Some(x) = q {
                    if x != 0.0 {
                        let s = x.signum();
                        if side == 0.0 {
                            side = s;
                        } else if side != s {
                            return None;
                        }
                    }
                }
            }
        }
        if side == 0.0 {
            None
        } else {
            Some(side)
        }
    }

    /// A point in the interior of the pants near the middle of the seam
    /// between two geodesic boundary slots (local coordinates).
    pub fn seam_midpoint(&self, slot_i: usize, slot_j: usize) -> Option<HPoint> {
        let fi = self.frames[slot_i]?;
        let inv = fi.inverse();
        let (u, v) = self.delta[slot_j].axis_endpoints()?;
        let u = inv.apply_boundary(u)?;
        let v = inv.apply_boundary(v)?;
        if u * v <= 0.0 {
            return None;
        }
        // Common perpendicular of the imaginary axis and (u, v) is the circle
        // of radius sqrt(uv) about 0; its midpoint in angle approximates the
        // seam midpoint well enough for an interior probe.
        let rho = (u * v).sqrt();
        let s = u.signum();
        let p = HPoint { x: s * rho / 2.0_f64.sqrt(), y: rho / 2.0_f64.sqrt() };
        Some(fi.apply(&p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::HPoint;

    /// Distance between the imaginary axis and the geodesic (u, v) with
    /// 0 < u < v: cosh d = (v + u) / (v - u).
    fn dist_axis_to_geodesic(u: f64, v: f64) -> f64 {
        ((v + u) / (v - u)).abs().acosh()
    }

    #[test]
    fn graph_canonical_counts() {
        for (g, n) in [(2usize, 0usize), (2, 1), (3, 2), (0, 3), (0, 4), (1, 1), (1, 2), (6, 4)] {
            let graph = PantsGraph::canonical(g, n).unwrap();
            assert_eq!(graph.genus(), g);
            assert_eq!(graph.cusps(), n);
            assert_eq!(graph.pants.len(), 2 * g + n - 2);
            assert_eq!(graph.edges.len(), 3 * g + n - 3);
        }
        assert!(PantsGraph::canonical(0, 2).is_err());
        assert!(PantsGraph::canonical(1, 0).is_err());
    }

    #[test]
    fn pants_traces_and_relation() {
        let piece = PantsPiece::build([2.0, 1.5, 0.7]).unwrap();
        let prod = piece.delta[0].compose(&piece.delta[1]).compose(&piece.delta[2]);
        assert!(prod.is_identity(1e-12));
        for k in 0..3 {
            let (l, _) = piece.delta[k].translation_length();
            assert!((l - piece.boundary_lengths[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn pants_with_cusps() {
        for lengths in [[2.0, 0.0, 2.0], [0.0, 0.0, 2.0], [0.0, 0.0, 0.0], [2.0, 2.0, 0.0]] {
            let piece = PantsPiece::build(lengths).unwrap();
            let prod = piece.delta[0].compose(&piece.delta[1]).compose(&piece.delta[2]);
            assert!(prod.is_identity(1e-12), "{lengths:?}");
        }
    }

    #[test]
    fn seam_matches_hexagon_rule() {
        // The common perpendicular distance between adjacent boundary axes
        // equals the doubled-hexagon seam length.
        let cases = [[2.0, 2.0, 2.0], [2.0, 1.5, 0.7], [0.5, 3.0, 1.0]];
        for lengths in cases {
            let piece = PantsPiece::build(lengths).unwrap();
            for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
                let expected = seam_length(lengths[i], lengths[j], lengths[k]);
                let inv = piece.frames[i].unwrap().inverse();
                let (u, v) = piece.delta[j].axis_endpoints().unwrap();
                let u = inv.apply_boundary(u).unwrap();
                let v = inv.apply_boundary(v).unwrap();
                assert!(u * v > 0.0, "axes must not cross");
                let d = dist_axis_to_geodesic(u, v);
                assert!(
                    (d - expected).abs() < 1e-9,
                    "{lengths:?} seam {i}-{j}: {d} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn symmetric_pants_seam_value() {
        // All cuffs l = 2: seams equal arccosh((cosh 1 + cosh^2 1)/sinh^2 1).
        let expected = ((1.0_f64.cosh() + 1.0_f64.cosh().powi(2)) / 1.0_f64.sinh().powi(2)).acosh();
        assert!((seam_length(2.0, 2.0, 2.0) - expected).abs() < 1e-14);
    }

    #[test]
    fn cusp_limit_of_seam_rule() {
        // l_k -> 0 limit of the hexagon rule stays finite and matches the
        // seam computed from the parabolic construction: the perpendicular
        // distance between the two geodesic boundary axes.
        let (li, lj) = (2.0, 2.0);
        let limit = seam_length(li, lj, 1e-9);
        let piece = PantsPiece::build([li, lj, 0.0]).unwrap();
        let inv = piece.frames[0].unwrap().inverse();
        let (u, v) = piece.delta[1].axis_endpoints().unwrap();
        let u = inv.apply_boundary(u).unwrap();
        let v = inv.apply_boundary(v).unwrap();
        let d = dist_axis_to_geodesic(u, v);
        assert!((d - limit).abs() < 1e-7, "{d} vs {limit}");
    }

    #[test]
    fn interior_side_uniform() {
        let cases = [
            [2.0, 2.0, 2.0],
            [2.0, 1.5, 0.7],
            [0.5, 3.0, 1.0],
            [2.0, 2.0, 0.0],
            [2.0, 0.0, 0.0],
            [0.1, 4.0, 0.0],
        ];
        for lengths in cases {
            let piece = PantsPiece::build(lengths).unwrap();
            for k in 0..3 {
                if lengths[k] > 0.0 {
                    let side = piece.interior_side(k);
                    assert_eq!(side, Some(-1.0), "{lengths:?} slot {k}: {side:?}");
                }
            }
        }
    }

    #[test]
    fn seam_midpoint_is_interior() {
        let piece = PantsPiece::build([2.0, 1.5, 0.7]).unwrap();
        let m = piece.seam_midpoint(0, 1).unwrap();
        // Interior points are moved by every boundary holonomy by more than
        // zero but the probe mainly checks it is a valid point.
        assert!(m.y > 0.0);
        let _ = HPoint::new(m.x, m.y).unwrap();
    }
}
