//! Piecewise-linear models: geodesic triangulations of assembled surfaces,
//! cusp truncation, and spherical caps.
//!
//! Meshing happens chart by chart.  Each pants contributes its two mirror
//! hexagons, triangulated in Klein coordinates where geodesics are straight
//! lines, so the Delaunay triangles are genuinely geodesic and their
//! hyperbolic areas sum to the area of the region.  Cuff circles, seams and
//! truncation horocycles are subdivided once, globally; neighbouring charts
//! reference the same vertex ids along shared boundaries, which makes the
//! quotient identifications exact on the combinatorial level.  Consistency
//! of the charts is audited by recomputing every shared edge length from
//! both sides.

use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};
use thiserror::Error;

use crate::hyperbolic::{HPoint, Isometry, Reflection};
use crate::surface::{
    foot_on_axis, gluing, normalizer, pants_hexagon, CuspRegion, HexCorner, Surface, SurfaceError,
};

/// Truncation horocycle length used when none is requested.
pub const DEFAULT_TRUNCATION: f64 = 0.1;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("mesh scale {0} out of range (0, 1]")]
    BadScale(f64),
    #[error("truncation length {0} out of range (0, 1]")]
    BadTruncation(f64),
    #[error("cusp neighbourhoods of length {0} are not disjoint; cap is too large")]
    CapTooLarge(f64),
    #[error("mesh construction degenerate: {0}")]
    Degenerate(String),
}

/// Which part of the model a vertex samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionTag {
    HyperbolicPart,
    Cap,
    Exclusion,
}

#[derive(Debug, Clone)]
pub struct MeshVertex {
    /// A lift of the vertex in surface (developed) coordinates.  Cap
    /// vertices reuse the lift of their equator meridian.
    pub lift: HPoint,
    /// Pants chart that owns the vertex.
    pub piece: usize,
    pub tag: RegionTag,
}

#[derive(Debug)]
pub struct SurfaceMesh {
    pub vertices: Vec<MeshVertex>,
    pub triangles: Vec<[usize; 3]>,
    /// Unique edges with their metric lengths.
    pub edges: Vec<(usize, usize, f64)>,
    pub adjacency: Vec<Vec<(usize, f64)>>,
    /// Total area of the model (hyperbolic part plus caps).
    pub area: f64,
    pub h: f64,
    /// Horocycle length at which cusps were cut (0 for a closed surface).
    pub truncation: f64,
    pub capped: bool,
    /// Per cusp, the truncation circle as a cyclically ordered vertex list.
    pub cusp_circles: Vec<Vec<usize>>,
    pub genus: usize,
    pub cusps: usize,
}

/// Triangulated model of the surface itself; cusps (if any) are truncated
/// at horocycle length `DEFAULT_TRUNCATION` and left as boundary circles.
pub fn mesh_surface(s: &Surface, h: f64) -> Result<SurfaceMesh, MeshError> {
    build_mesh(s, h, DEFAULT_TRUNCATION, false)
}

/// Truncate every cusp at horocycle length `eps` and close each boundary
/// circle with a triangulated hemispherical cap of matching equator length.
/// The caps add at most `n eps^2 / (2 pi)` of area, far below the
/// `100 n eps^2` budget; an `eps` whose neighbourhoods overlap is refused.
pub fn truncate_and_cap(s: &Surface, eps: f64, h: f64) -> Result<SurfaceMesh, MeshError> {
    build_mesh(s, h, eps, true)
}

struct CircleVert {
    vid: usize,
    tp: f64,
    tq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum ChainKey {
    /// Half-cuff side of `slot` on hexagon `copy` of `pants`.
    Cuff { pants: usize, slot: usize, copy: usize },
    /// Seam between slots `k` and `k + 1`.
    Seam { pants: usize, k: usize, copy: usize },
    /// Truncation horocycle arc at a cusp slot.
    CuspArc { pants: usize, slot: usize, copy: usize },
}

/// The reflection exchanging the two hexagons of a pants, in pants-local
/// coordinates.
enum Mirror {
    /// Reflection in the circle `|z| = rho` of the given frame.
    Framed { frame: Isometry, rho: f64 },
    /// Raw geodesic reflection (all-cusp pants have no cuff frame).
    Geo(Reflection),
}

impl Mirror {
    fn apply(&self, p: &HPoint) -> HPoint {
        match self {
            Mirror::Framed { frame, rho } => {
                let r = Reflection::in_circle(0.0, *rho);
                frame.apply(&r.apply(&frame.inverse().apply(p)))
            }
            Mirror::Geo(r) => r.apply(p),
        }
    }
}

struct Builder<'a> {
    s: &'a Surface,
    h: f64,
    /// Interior sample spacing, slightly adaptive in `h`.
    dh: f64,
    /// Boundary chain spacing: quadratic in `h`, so that halving `h`
    /// quadruples the subdivision of the one-dimensional chains just as it
    /// does the interior samples (triangle counts then scale cleanly).
    bh: f64,
    eps: f64,
    mirrors: Vec<Mirror>,
    verts: Vec<MeshVertex>,
    chains: HashMap<ChainKey, Vec<(usize, HPoint)>>,
    /// `(pants, slot, toward)` -> vertex id of the hexagon corner (finite
    /// slots) or of the truncation point on the adjacent seam (cusp slots).
    corners: HashMap<(usize, usize, usize), usize>,
    /// Local h0 position of each truncation point.
    trunc_pos: HashMap<(usize, usize, usize), HPoint>,
    cusp_circles: Vec<Vec<usize>>,
    triangles: Vec<[usize; 3]>,
    edges: HashMap<(usize, usize), f64>,
    area: f64,
}

fn prev(k: usize) -> usize {
    (k + 2) % 3
}

fn next(k: usize) -> usize {
    (k + 1) % 3
}

fn inside_poly(poly: &[[f64; 2]], pt: [f64; 2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a[1] > pt[1]) != (b[1] > pt[1]) {
            let x = a[0] + (pt[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if x > pt[0] {
                inside = !inside;
            }
        }
    }
    inside
}

fn klein_of_boundary(u: Option<f64>) -> [f64; 2] {
    match u {
        Some(t) => {
            let d = t * t + 1.0;
            [(t * t - 1.0) / d, 2.0 * t / d]
        }
        None => [1.0, 0.0],
    }
}

/// An interior point of a chart region, found by recentring the Klein
/// barycentre of its boundary once.
fn chart_center(ps: &[HPoint]) -> Result<HPoint, MeshError> {
    let mean = |pts: &[[f64; 2]]| {
        let mut m = [0.0; 2];
        for k in pts {
            m[0] += k[0];
            m[1] += k[1];
        }
        [m[0] / pts.len() as f64, m[1] / pts.len() as f64]
    };
    let raw: Vec<[f64; 2]> = ps.iter().map(|p| p.to_klein()).collect();
    let c0 = HPoint::from_klein(mean(&raw))
        .map_err(|_| MeshError::Degenerate("chart barycentre on the boundary".into()))?;
    let norm = normalizer(&c0);
    let shifted: Vec<[f64; 2]> = ps.iter().map(|p| norm.apply(p).to_klein()).collect();
    let c1 = HPoint::from_klein(mean(&shifted))
        .map_err(|_| MeshError::Degenerate("chart barycentre on the boundary".into()))?;
    Ok(norm.inverse().apply(&c1))
}

/// Hyperbolic triangle area from side lengths, by angle defect.
fn triangle_area_hyp(a: f64, b: f64, c: f64) -> f64 {
    let ang = |opp: f64, s1: f64, s2: f64| {
        ((s1.cosh() * s2.cosh() - opp.cosh()) / (s1.sinh() * s2.sinh())).clamp(-1.0, 1.0).acos()
    };
    (std::f64::consts::PI - ang(a, b, c) - ang(b, a, c) - ang(c, a, b)).max(0.0)
}

/// Spherical triangle area on a sphere of radius `r0` (L'Huilier), sides
/// given as lengths.
fn triangle_area_sph(a: f64, b: f64, c: f64, r0: f64) -> f64 {
    let (a, b, c) = (a / r0, b / r0, c / r0);
    let s = 0.5 * (a + b + c);
    let t = ((s / 2.0).tan()
        * ((s - a) / 2.0).tan()
        * ((s - b) / 2.0).tan()
        * ((s - c) / 2.0).tan())
    .max(0.0);
    4.0 * t.sqrt().atan() * r0 * r0
}

fn build_mesh(s: &Surface, h: f64, eps: f64, cap: bool) -> Result<SurfaceMesh, MeshError> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(MeshError::BadScale(h));
    }
    if s.n > 0 {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(MeshError::BadTruncation(eps));
        }
        if s.n > 1 {
            let regions: Vec<CuspRegion> = (0..s.n)
                .map(|c| s.cusp_neighborhood(c, eps))
                .collect::<Result<_, _>>()?;
            if !s.cusp_regions_disjoint(&regions, 6.0) {
                return Err(MeshError::CapTooLarge(eps));
            }
        }
    }

    let mut mirrors = Vec::with_capacity(s.pieces.len());
    for (p, piece) in s.pieces.iter().enumerate() {
        mirrors.push(match s.mirror_parts(p) {
            Some((frame, rho)) => Mirror::Framed { frame, rho },
            None => {
                // Thrice-punctured sphere: reflect in the seam joining the
                // fixed points of the first two cusps.
                let u = piece.delta[0].parabolic_fixed_point().expect("cusp slot");
                let v = piece.delta[1].parabolic_fixed_point().expect("cusp slot");
                let r = match (u, v) {
                    (Some(u), Some(v)) => Reflection::in_circle((u + v) / 2.0, (u - v).abs() / 2.0),
                    (Some(u), None) | (None, Some(u)) => Reflection::in_vertical(u),
                    (None, None) => {
                        return Err(MeshError::Degenerate("coincident cusp points".into()))
                    }
                };
                Mirror::Geo(r)
            }
        });
    }

    let mut b = Builder {
        s,
        h,
        dh: 0.8 * h * (1.0 + 2.0 * h),
        bh: (h * h / 0.4).min(h),
        eps,
        mirrors,
        verts: Vec::new(),
        chains: HashMap::new(),
        corners: HashMap::new(),
        trunc_pos: HashMap::new(),
        cusp_circles: vec![Vec::new(); s.n],
        triangles: Vec::new(),
        edges: HashMap::new(),
        area: 0.0,
    };

    for e in 0..s.graph.edges.len() {
        b.build_cuff_circle(e)?;
    }
    for c in 0..s.n {
        b.build_cusp_circle(c)?;
    }
    for p in 0..s.pieces.len() {
        for k in 0..3 {
            b.build_seam(p, k)?;
        }
    }
    for p in 0..s.pieces.len() {
        for copy in 0..2 {
            b.mesh_chart(p, copy)?;
        }
    }
    if cap {
        for c in 0..s.n {
            b.build_cap(c)?;
        }
    }
    b.finish(cap)
}

impl Builder<'_> {
    fn new_vertex(&mut self, piece: usize, local: &HPoint) -> usize {
        let lift = self.s.dev[piece].apply(local);
        self.verts.push(MeshVertex { lift, piece, tag: RegionTag::HyperbolicPart });
        self.verts.len() - 1
    }

    fn add_edge(&mut self, u: usize, v: usize, len: f64) -> Result<(), MeshError> {
        if u == v || len < 1e-12 {
            return Err(MeshError::Degenerate(format!("edge ({u}, {v}) of length {len:.3e}")));
        }
        let key = (u.min(v), u.max(v));
        match self.edges.get(&key) {
            Some(old) if (old - len).abs() > 1e-6 * len.max(1.0) => Err(MeshError::Degenerate(
                format!("edge ({u}, {v}) measures {old:.9} and {len:.9} in different charts"),
            )),
            Some(_) => Ok(()),
            None => {
                self.edges.insert(key, len);
                Ok(())
            }
        }
    }

    /// Shared vertex cycle on the cuff circle of internal edge `e`, split
    /// into the four half-cuff chains that reference it.  The circle is
    /// parameterized by arclength along the axis of the `ends[0]` side; the
    /// hexagon h0 covers `[ap, bp]` (the segment between the two seam feet)
    /// and h1 covers the complementary arc, reached through the mirror at
    /// the reflected parameter `2 bp - t`.
    fn build_cuff_circle(&mut self, e: usize) -> Result<(), MeshError> {
        let ends = self.s.graph.edges[e];
        let len = self.s.coords.lengths[e];
        let (p, i) = ends[0];
        let (q, j) = ends[1];
        let fp = self.s.pieces[p].frames[i].expect("internal cuff");
        let fq = self.s.pieces[q].frames[j].expect("internal cuff");
        let glue = gluing(&self.s.pieces, ends, len, self.s.coords.twists[e]);

        let param_p = |x: &HPoint| fp.inverse().apply(x).y.ln();
        let param_q_of_p = |t: f64| {
            let x = fp.apply(&HPoint { x: 0.0, y: t.exp() });
            let z = fq.inverse().apply(&glue.inverse().apply(&x));
            debug_assert!(z.x.abs() < 1e-6 * z.y, "gluing must carry axis to axis");
            z.y.ln()
        };

        let feet_p =
            [(foot_on_axis(&self.s.pieces[p], i, prev(i)), prev(i)),
             (foot_on_axis(&self.s.pieces[p], i, next(i)), next(i))];
        let feet_q =
            [(foot_on_axis(&self.s.pieces[q], j, prev(j)), prev(j)),
             (foot_on_axis(&self.s.pieces[q], j, next(j)), next(j))];
        let tp0 = param_p(&feet_p[0].0);
        let tp1 = param_p(&feet_p[1].0);
        let (ap, bp) = (tp0.min(tp1), tp0.max(tp1));
        if (bp - ap - len / 2.0).abs() > 1e-6 {
            return Err(MeshError::Degenerate("half cuff is not half the cuff".into()));
        }
        let tq0 = fq.inverse().apply(&feet_q[0].0).y.ln();
        let tq1 = fq.inverse().apply(&feet_q[1].0).y.ln();
        let (aq, bq) = (tq0.min(tq1), tq0.max(tq1));

        let norm_p = |t: f64| ap + (t - ap + 1e-9).rem_euclid(len) - 1e-9;
        let norm_q = |t: f64| aq + (t - aq + 1e-9).rem_euclid(len) - 1e-9;

        // Breakpoints: the four seam feet, with their corner labels.
        let mut breaks: Vec<(f64, Vec<(usize, usize, usize)>)> = Vec::new();
        let mut push_break = |t: f64, label: (usize, usize, usize)| {
            for (u, labels) in breaks.iter_mut() {
                if (*u - t).abs() < 1e-9 {
                    labels.push(label);
                    return;
                }
            }
            breaks.push((t, vec![label]));
        };
        push_break(norm_p(tp0), (p, i, feet_p[0].1));
        push_break(norm_p(tp1), (p, i, feet_p[1].1));
        // Q-side feet mapped through the gluing into P-side parameters.
        for (foot, toward) in &feet_q {
            let t = param_p(&glue.apply(foot));
            push_break(norm_p(t), (q, j, *toward));
        }
        breaks.sort_by(|a, b| a.0.total_cmp(&b.0));
        if breaks.len() > 1 && breaks[0].0 + len - breaks.last().unwrap().0 < 1e-9 {
            let (_, labels) = breaks.pop().unwrap();
            breaks[0].1.extend(labels);
        }

        // Subdivide every gap to spacing <= h and create the vertices.
        let mut circle: Vec<CircleVert> = Vec::new();
        let nb = breaks.len();
        for bi in 0..nb {
            let t0 = breaks[bi].0;
            let t1 = if bi + 1 < nb { breaks[bi + 1].0 } else { breaks[0].0 + len };
            let steps = ((t1 - t0) / self.bh).ceil().max(1.0) as usize;
            for k in 0..steps {
                let t = norm_p(t0 + (t1 - t0) * k as f64 / steps as f64);
                let pos = self.circle_pos(p, &fp, ap, bp, t);
                let vid = self.new_vertex(p, &pos);
                if k == 0 {
                    for label in &breaks[bi].1 {
                        self.corners.insert(*label, vid);
                    }
                }
                circle.push(CircleVert { vid, tp: t, tq: norm_q(param_q_of_p(t)) });
            }
        }

        // The four chains, ordered along their own parameter.
        let side = |verts: &[CircleVert],
                    a: f64,
                    bnd: f64,
                    full: f64,
                    key: &dyn Fn(&CircleVert) -> f64,
                    h0: bool| {
            let mut items: Vec<(f64, usize)> = verts
                .iter()
                .filter_map(|v| {
                    let t = key(v);
                    if h0 {
                        (t <= bnd + 1e-9).then_some((t, v.vid))
                    } else if t >= bnd - 1e-9 {
                        Some((t, v.vid))
                    } else if t <= a + 1e-9 {
                        // The start of the fundamental interval is also the
                        // far end of the mirror arc.
                        Some((t + full, v.vid))
                    } else {
                        None
                    }
                })
                .collect();
            items.sort_by(|x, y| x.0.total_cmp(&y.0));
            items
        };
        let mk = |this: &Self, pants: usize, frame: &Isometry, a: f64, bnd: f64, items: &[(f64, usize)], h0: bool| {
            items
                .iter()
                .map(|(t, vid)| (*vid, this.axis_chain_pos(pants, frame, a, bnd, *t, h0)))
                .collect::<Vec<_>>()
        };
        let p_h0 = side(&circle, ap, bp, len, &|v| v.tp, true);
        let p_h1 = side(&circle, ap, bp, len, &|v| v.tp, false);
        let q_h0 = side(&circle, aq, bq, len, &|v| v.tq, true);
        let q_h1 = side(&circle, aq, bq, len, &|v| v.tq, false);
        let c0 = mk(self, p, &fp, ap, bp, &p_h0, true);
        let c1 = mk(self, p, &fp, ap, bp, &p_h1, false);
        let c2 = mk(self, q, &fq, aq, bq, &q_h0, true);
        let c3 = mk(self, q, &fq, aq, bq, &q_h1, false);
        self.chains.insert(ChainKey::Cuff { pants: p, slot: i, copy: 0 }, c0);
        self.chains.insert(ChainKey::Cuff { pants: p, slot: i, copy: 1 }, c1);
        self.chains.insert(ChainKey::Cuff { pants: q, slot: j, copy: 0 }, c2);
        self.chains.insert(ChainKey::Cuff { pants: q, slot: j, copy: 1 }, c3);
        Ok(())
    }

    /// Owning-chart position of the circle point at parameter `t`: on the
    /// axis inside h0, through the mirror beyond it.
    fn circle_pos(&self, pants: usize, frame: &Isometry, a: f64, bnd: f64, t: f64) -> HPoint {
        if t <= bnd + 1e-9 {
            frame.apply(&HPoint { x: 0.0, y: t.exp() })
        } else {
            let u = 2.0 * bnd - t;
            debug_assert!(u >= a - 1e-6);
            self.mirrors[pants].apply(&frame.apply(&HPoint { x: 0.0, y: u.exp() }))
        }
    }

    fn axis_chain_pos(
        &self,
        pants: usize,
        frame: &Isometry,
        a: f64,
        bnd: f64,
        t: f64,
        h0: bool,
    ) -> HPoint {
        if h0 {
            frame.apply(&HPoint { x: 0.0, y: t.exp() })
        } else {
            let u = (2.0 * bnd - t).clamp(a, bnd);
            self.mirrors[pants].apply(&frame.apply(&HPoint { x: 0.0, y: u.exp() }))
        }
    }

    /// Truncation horocycle of cusp `c`: a shared vertex cycle of total
    /// length `eps`, split at the two adjacent seams into the h0 and h1
    /// arcs (each exactly half by the mirror symmetry).
    fn build_cusp_circle(&mut self, c: usize) -> Result<(), MeshError> {
        let (p, m) = self.s.cusp_slots[c];
        let piece = &self.s.pieces[p];
        let eps = self.eps;
        let del = piece.delta[m];
        let fixed = del.parabolic_fixed_point().expect("cusp slot is parabolic");
        let to_inf = match fixed {
            None => Isometry::identity(),
            Some(u) => Isometry::from_entries(0.0, -1.0, 1.0, -u).expect("det 1"),
        };
        let w = to_inf.compose(&del).compose(&to_inf.inverse());
        let shift = (w.b / w.a).abs();
        let a = 1.0 / shift.sqrt();
        let f = Isometry::from_entries(a, 0.0, 0.0, 1.0 / a).expect("det 1").compose(&to_inf);
        let f_inv = f.inverse();

        // Vertical seam lines toward the two neighbouring slots.
        let seam_x = |toward: usize| -> Result<f64, MeshError> {
            if piece.boundary_lengths[toward] > 0.0 {
                Ok(f.apply(&foot_on_axis(piece, toward, m)).x)
            } else {
                let fp2 = piece.delta[toward].parabolic_fixed_point().expect("cusp slot");
                f.apply_boundary(fp2)
                    .ok_or_else(|| MeshError::Degenerate("coincident cusp points".into()))
            }
        };
        let x_prev = seam_x(prev(m))?;
        let x_next = seam_x(next(m))?;
        let w1 = (x_next - x_prev).rem_euclid(1.0);
        if (w1 - 0.5).abs() > 1e-6 {
            return Err(MeshError::Degenerate("cusp circle is not halved by the seams".into()));
        }

        // Which half-arc borders hexagon h0, by a midpoint test against the
        // hexagon polygon in recentred Klein coordinates.
        let (poly, norm) = self.hexagon_poly(p)?;
        let mid_in_h0 = |x0: f64| {
            let pt = f_inv.apply(&HPoint { x: x0 + 0.25, y: 1.0 / eps });
            inside_poly(&poly, norm.apply(&pt).to_klein())
        };
        let (xs, xe, start_toward, end_toward) = if mid_in_h0(x_prev) {
            (x_prev, x_prev + 0.5, prev(m), next(m))
        } else if mid_in_h0(x_next) {
            (x_next, x_next + 0.5, next(m), prev(m))
        } else {
            return Err(MeshError::Degenerate("cusp arc not found in either hexagon".into()));
        };

        let steps = ((0.5 * eps) / self.bh).ceil().max(4.0) as usize;
        let at = |x: f64| f_inv.apply(&HPoint { x, y: 1.0 / eps });

        // h0 arc, truncation endpoints included.
        let mut h0_chain: Vec<(usize, HPoint)> = Vec::new();
        for k in 0..=steps {
            let x = xs + 0.5 * k as f64 / steps as f64;
            let pos = at(x);
            let vid = self.new_vertex(p, &pos);
            h0_chain.push((vid, pos));
        }
        let (vs, ve) = (h0_chain[0].0, h0_chain[steps].0);
        self.corners.insert((p, m, start_toward), vs);
        self.corners.insert((p, m, end_toward), ve);
        self.trunc_pos.insert((p, m, start_toward), h0_chain[0].1);
        self.trunc_pos.insert((p, m, end_toward), h0_chain[steps].1);

        // h1 arc: same endpoints, mirrored interior.
        let mut h1_chain: Vec<(usize, HPoint)> =
            vec![(ve, self.mirrors[p].apply(&h0_chain[steps].1))];
        let mut h1_interior = Vec::new();
        for k in 1..steps {
            let x = xe + 0.5 * k as f64 / steps as f64;
            let pos = self.mirrors[p].apply(&at(2.0 * xe - x));
            let vid = self.new_vertex(p, &pos);
            h1_chain.push((vid, pos));
            h1_interior.push(vid);
        }
        h1_chain.push((vs, self.mirrors[p].apply(&h0_chain[0].1)));

        let mut cycle: Vec<usize> = h0_chain.iter().map(|(v, _)| *v).collect();
        cycle.extend(h1_interior);
        self.cusp_circles[c] = cycle;
        self.chains.insert(ChainKey::CuspArc { pants: p, slot: m, copy: 0 }, h0_chain);
        self.chains.insert(ChainKey::CuspArc { pants: p, slot: m, copy: 1 }, h1_chain);
        Ok(())
    }

    /// The hexagon h0 of pants `p` as a convex Klein polygon, together with
    /// the recentring frame it is expressed in.
    fn hexagon_poly(&self, p: usize) -> Result<(Vec<[f64; 2]>, Isometry), MeshError> {
        let hex = pants_hexagon(&self.s.pieces[p]);
        let corners = hex.distinct_corners();
        let finite: Vec<HPoint> = corners
            .iter()
            .filter_map(|c| match c {
                HexCorner::Finite(q) => Some(*q),
                HexCorner::Ideal(_) => None,
            })
            .collect();
        let center = if finite.is_empty() {
            // Ideal triangle: barycentre of the Klein boundary points.
            let ks: Vec<[f64; 2]> = corners.iter().map(|c| c.klein()).collect();
            let m = [
                ks.iter().map(|k| k[0]).sum::<f64>() / ks.len() as f64,
                ks.iter().map(|k| k[1]).sum::<f64>() / ks.len() as f64,
            ];
            HPoint::from_klein(m)
                .map_err(|_| MeshError::Degenerate("degenerate ideal triangle".into()))?
        } else {
            chart_center(&finite)?
        };
        let norm = normalizer(&center);
        let poly = corners
            .iter()
            .map(|c| match c {
                HexCorner::Finite(q) => norm.apply(q).to_klein(),
                HexCorner::Ideal(u) => klein_of_boundary(norm.apply_boundary(*u)),
            })
            .collect();
        Ok((poly, norm))
    }

    /// Shared seam chain between slots `k` and `k + 1` of pants `p`.
    fn build_seam(&mut self, p: usize, k: usize) -> Result<(), MeshError> {
        let piece = &self.s.pieces[p];
        let j = next(k);
        let end = |slot: usize, toward: usize| -> Result<(usize, HPoint), MeshError> {
            let vid = *self
                .corners
                .get(&(p, slot, toward))
                .ok_or_else(|| MeshError::Degenerate("missing seam endpoint".into()))?;
            let pos = if piece.boundary_lengths[slot] > 0.0 {
                foot_on_axis(piece, slot, toward)
            } else {
                self.trunc_pos[&(p, slot, toward)]
            };
            Ok((vid, pos))
        };
        let (va, pa) = end(k, j)?;
        let (vb, pb) = end(j, k)?;
        let arc = crate::hyperbolic::GeodesicArc::between(&pa, &pb)
            .map_err(|_| MeshError::Degenerate("degenerate seam".into()))?;
        let steps = (arc.length / self.bh).ceil().max(1.0) as usize;
        let mut h0_chain = vec![(va, pa)];
        for i in 1..steps {
            let pos = arc.eval(i as f64 / steps as f64);
            let vid = self.new_vertex(p, &pos);
            h0_chain.push((vid, pos));
        }
        h0_chain.push((vb, pb));
        let h1_chain: Vec<(usize, HPoint)> =
            h0_chain.iter().map(|(v, pos)| (*v, self.mirrors[p].apply(pos))).collect();
        self.chains.insert(ChainKey::Seam { pants: p, k, copy: 0 }, h0_chain);
        self.chains.insert(ChainKey::Seam { pants: p, k, copy: 1 }, h1_chain);
        Ok(())
    }

    fn corner_vid(&self, p: usize, slot: usize, toward: usize) -> Result<usize, MeshError> {
        self.corners
            .get(&(p, slot, toward))
            .copied()
            .ok_or_else(|| MeshError::Degenerate("missing hexagon corner".into()))
    }

    /// Closed boundary loop of chart `(p, copy)` in chart-local positions.
    fn chart_loop(&self, p: usize, copy: usize) -> Result<Vec<(usize, HPoint)>, MeshError> {
        let piece = &self.s.pieces[p];
        let mut out: Vec<(usize, HPoint)> = Vec::new();
        for k in 0..3 {
            let from = self.corner_vid(p, k, prev(k))?;
            let to = self.corner_vid(p, k, next(k))?;
            let key = if piece.boundary_lengths[k] > 0.0 {
                ChainKey::Cuff { pants: p, slot: k, copy }
            } else {
                ChainKey::CuspArc { pants: p, slot: k, copy }
            };
            let side = oriented(&self.chains[&key], from, to)?;
            out.extend_from_slice(&side[..side.len() - 1]);
            let to2 = self.corner_vid(p, next(k), k)?;
            let seam = oriented(&self.chains[&ChainKey::Seam { pants: p, k, copy }], to, to2)?;
            out.extend_from_slice(&seam[..seam.len() - 1]);
        }
        Ok(out)
    }

    /// Triangulate one hexagon chart: boundary chains as constraints, a
    /// radial net of interior samples, constrained Delaunay in recentred
    /// Klein coordinates, then lengths and areas per geodesic triangle.
    fn mesh_chart(&mut self, p: usize, copy: usize) -> Result<(), MeshError> {
        let loop_pts = self.chart_loop(p, copy)?;
        let locals: Vec<HPoint> = loop_pts.iter().map(|(_, pos)| *pos).collect();
        let center = chart_center(&locals)?;
        let norm = normalizer(&center);
        let chart: Vec<HPoint> = locals.iter().map(|q| norm.apply(q)).collect();
        let poly: Vec<[f64; 2]> = chart.iter().map(|q| q.to_klein()).collect();
        let bbox = poly.iter().fold([f64::MAX, f64::MAX, f64::MIN, f64::MIN], |b, k| {
            [b[0].min(k[0]), b[1].min(k[1]), b[2].max(k[0]), b[3].max(k[1])]
        });
        let origin = HPoint::i();
        let r_cov = chart.iter().map(|q| origin.dist(q)).fold(0.0, f64::max);

        // Interior samples on hyperbolic circles around the chart centre,
        // kept clear of the boundary chains.
        let mut interior: Vec<(usize, HPoint)> = Vec::new();
        let dh = self.dh;
        let mut ring = 1usize;
        while ring as f64 * dh <= r_cov {
            let r = ring as f64 * dh;
            let count = ((2.0 * std::f64::consts::PI * r.sinh() / dh).ceil() as usize).max(6);
            let kr = r.tanh();
            for idx in 0..count {
                let theta =
                    2.0 * std::f64::consts::PI * (idx as f64 + 0.37 * ring as f64) / count as f64;
                let cand = [kr * theta.cos(), kr * theta.sin()];
                if cand[0] < bbox[0] || cand[1] < bbox[1] || cand[0] > bbox[2] || cand[1] > bbox[3]
                {
                    continue;
                }
                if !inside_poly(&poly, cand) {
                    continue;
                }
                let hp = match HPoint::from_klein(cand) {
                    Ok(hp) => hp,
                    Err(_) => continue,
                };
                if chart.iter().any(|q| q.dist(&hp) < 0.6 * dh) {
                    continue;
                }
                let local = norm.inverse().apply(&hp);
                let vid = self.new_vertex(p, &local);
                interior.push((vid, hp));
            }
            ring += 1;
        }

        // Constrained Delaunay in the Klein chart.
        let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
            ConstrainedDelaunayTriangulation::new();
        let mut handle_vid = HashMap::new();
        let mut loop_handles = Vec::with_capacity(loop_pts.len());
        for ((vid, _), q) in loop_pts.iter().zip(&chart) {
            let k = q.to_klein();
            let hd = cdt
                .insert(Point2::new(k[0], k[1]))
                .map_err(|e| MeshError::Degenerate(format!("cdt insert: {e:?}")))?;
            if handle_vid.insert(hd.index(), *vid).is_some() && loop_handles.contains(&hd) {
                return Err(MeshError::Degenerate("coincident boundary vertices".into()));
            }
            loop_handles.push(hd);
        }
        for (vid, hp) in &interior {
            let k = hp.to_klein();
            let hd = cdt
                .insert(Point2::new(k[0], k[1]))
                .map_err(|e| MeshError::Degenerate(format!("cdt insert: {e:?}")))?;
            handle_vid.insert(hd.index(), *vid);
        }
        let nl = loop_handles.len();
        for i in 0..nl {
            let (a, b) = (loop_handles[i], loop_handles[(i + 1) % nl]);
            if a != b {
                cdt.add_constraint(a, b);
            }
        }

        // Harvest faces inside the region.  Faces whose three corners are
        // all boundary-chain vertices are split at their centroid first:
        // chain vertices are shared with other charts, and a triangle made
        // only of shared vertices would reappear verbatim from the mirror
        // chart (thin corridors between two seams have exactly this shape),
        // breaking the complex.  A private interior vertex per face rules
        // that out.
        let loop_set: std::collections::HashSet<usize> =
            loop_pts.iter().map(|(v, _)| *v).collect();
        let mut faces = Vec::new();
        for round in 0..64 {
            faces.clear();
            let mut split_at: Vec<[f64; 2]> = Vec::new();
            for face in cdt.inner_faces() {
                let vs = face.vertices();
                let ps: Vec<[f64; 2]> =
                    vs.iter().map(|v| [v.position().x, v.position().y]).collect();
                // Chain vertices along one geodesic side are exactly
                // collinear in Klein coordinates; the triangulation can emit
                // zero-area slivers on them whose centroid sits on the
                // boundary itself.
                let cross = (ps[1][0] - ps[0][0]) * (ps[2][1] - ps[0][1])
                    - (ps[1][1] - ps[0][1]) * (ps[2][0] - ps[0][0]);
                if cross.abs() < 1e-13 {
                    continue;
                }
                let centroid = [
                    (ps[0][0] + ps[1][0] + ps[2][0]) / 3.0,
                    (ps[0][1] + ps[1][1] + ps[2][1]) / 3.0,
                ];
                if !inside_poly(&poly, centroid) {
                    continue;
                }
                let ids = [
                    handle_vid[&vs[0].fix().index()],
                    handle_vid[&vs[1].fix().index()],
                    handle_vid[&vs[2].fix().index()],
                ];
                if ids.iter().all(|v| loop_set.contains(v)) {
                    split_at.push(centroid);
                } else {
                    faces.push((ids, ps));
                }
            }
            if split_at.is_empty() {
                break;
            }
            if round == 63 {
                return Err(MeshError::Degenerate(
                    "steiner refinement did not stabilize".into(),
                ));
            }
            for k in split_at {
                let hp = HPoint::from_klein(k)
                    .map_err(|_| MeshError::Degenerate("steiner point on the boundary".into()))?;
                let local = norm.inverse().apply(&hp);
                let vid = self.new_vertex(p, &local);
                let hd = cdt
                    .insert(Point2::new(k[0], k[1]))
                    .map_err(|e| MeshError::Degenerate(format!("cdt insert: {e:?}")))?;
                handle_vid.insert(hd.index(), vid);
            }
        }
        for (ids, ps) in faces {
            let hp: Vec<HPoint> = ps
                .iter()
                .map(|k| HPoint::from_klein(*k))
                .collect::<Result<_, _>>()
                .map_err(|_| MeshError::Degenerate("face vertex on the boundary".into()))?;
            let d01 = hp[0].dist(&hp[1]);
            let d12 = hp[1].dist(&hp[2]);
            let d20 = hp[2].dist(&hp[0]);
            self.add_edge(ids[0], ids[1], d01)?;
            self.add_edge(ids[1], ids[2], d12)?;
            self.add_edge(ids[2], ids[0], d20)?;
            self.area += triangle_area_hyp(d01, d12, d20);
            self.triangles.push(ids);
        }
        Ok(())
    }

    /// Hemispherical cap over cusp circle `c`, triangulated by latitude
    /// bands; the equator vertices are the existing circle vertices,
    /// matched by arclength fraction.
    fn build_cap(&mut self, c: usize) -> Result<(), MeshError> {
        let ring0 = self.cusp_circles[c].clone();
        let m = ring0.len();
        let r0 = self.eps / (2.0 * std::f64::consts::PI);
        let nr = ((r0 * std::f64::consts::FRAC_PI_2 / self.h).ceil() as usize).max(2);
        let (p, _) = self.s.cusp_slots[c];

        // Equator angles from cumulative metric arclength.
        let mut acc = vec![0.0f64; m + 1];
        for i in 0..m {
            let (u, v) = (ring0[i], ring0[(i + 1) % m]);
            let key = (u.min(v), u.max(v));
            let step = self.edges.get(&key).copied().ok_or_else(|| {
                MeshError::Degenerate("cusp circle edge missing from the mesh".into())
            })?;
            acc[i + 1] = acc[i] + step;
        }
        let total = acc[m];
        let theta: Vec<f64> =
            (0..m).map(|i| 2.0 * std::f64::consts::PI * acc[i] / total).collect();

        let unit = |phi: f64, th: f64| [phi.cos() * th.cos(), phi.cos() * th.sin(), phi.sin()];
        let sph = |u: [f64; 3], v: [f64; 3]| {
            r0 * (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]).clamp(-1.0, 1.0).acos()
        };

        // Vertex grid: ring 0 reuses the circle, upper rings and the pole
        // are new cap vertices carrying the lift of their meridian.
        let mut rings: Vec<Vec<(usize, [f64; 3])>> = Vec::with_capacity(nr);
        rings.push(
            (0..m).map(|i| (ring0[i], unit(0.0, theta[i]))).collect(),
        );
        for j in 1..nr {
            let phi = std::f64::consts::FRAC_PI_2 * j as f64 / nr as f64;
            let mut ring = Vec::with_capacity(m);
            for i in 0..m {
                let lift = self.verts[ring0[i]].lift;
                self.verts.push(MeshVertex { lift, piece: p, tag: RegionTag::Cap });
                ring.push((self.verts.len() - 1, unit(phi, theta[i])));
            }
            rings.push(ring);
        }
        let pole = {
            let lift = self.verts[ring0[0]].lift;
            self.verts.push(MeshVertex { lift, piece: p, tag: RegionTag::Cap });
            (self.verts.len() - 1, unit(std::f64::consts::FRAC_PI_2, 0.0))
        };

        let cap_edge = |this: &mut Self, a: (usize, [f64; 3]), b: (usize, [f64; 3])| {
            let key = (a.0.min(b.0), a.0.max(b.0));
            if !this.edges.contains_key(&key) {
                this.edges.insert(key, sph(a.1, b.1).max(1e-9));
            }
        };
        let tri = |this: &mut Self, a: (usize, [f64; 3]), b: (usize, [f64; 3]), c2: (usize, [f64; 3])| {
            cap_edge(this, a, b);
            cap_edge(this, b, c2);
            cap_edge(this, c2, a);
            this.area += triangle_area_sph(
                sph(a.1, b.1).max(1e-9),
                sph(b.1, c2.1).max(1e-9),
                sph(c2.1, a.1).max(1e-9),
                r0,
            );
            this.triangles.push([a.0, b.0, c2.0]);
        };
        for j in 0..nr - 1 {
            for i in 0..m {
                let i2 = (i + 1) % m;
                let (a, b) = (rings[j][i], rings[j][i2]);
                let (d, e) = (rings[j + 1][i], rings[j + 1][i2]);
                tri(self, a, b, d);
                tri(self, b, e, d);
            }
        }
        for i in 0..m {
            let i2 = (i + 1) % m;
            tri(self, rings[nr - 1][i], rings[nr - 1][i2], pole);
        }
        Ok(())
    }

    fn finish(self, cap: bool) -> Result<SurfaceMesh, MeshError> {
        let nv = self.verts.len();
        let mut adjacency = vec![Vec::new(); nv];
        let mut edges: Vec<(usize, usize, f64)> =
            self.edges.iter().map(|(&(u, v), &l)| (u, v, l)).collect();
        edges.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for &(u, v, l) in &edges {
            adjacency[u].push((v, l));
            adjacency[v].push((u, l));
        }

        // Connectivity.
        let mut seen = vec![false; nv];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    stack.push(v);
                }
            }
        }
        if reached != nv {
            return Err(MeshError::Degenerate(format!(
                "mesh disconnected: {reached} of {nv} vertices reached"
            )));
        }

        // Euler characteristic audit against the expected topology.
        let (g, n) = (self.s.g, self.s.n);
        let chi = nv as i64 - edges.len() as i64 + self.triangles.len() as i64;
        let expected = if cap || n == 0 { 2 - 2 * g as i64 } else { 2 - 2 * g as i64 - n as i64 };
        if chi != expected {
            return Err(MeshError::Degenerate(format!(
                "Euler characteristic {chi}, expected {expected}"
            )));
        }

        Ok(SurfaceMesh {
            vertices: self.verts,
            triangles: self.triangles,
            edges,
            adjacency,
            area: self.area,
            h: self.h,
            truncation: if n == 0 { 0.0 } else { self.eps },
            capped: cap && n > 0,
            cusp_circles: self.cusp_circles,
            genus: g,
            cusps: n,
        })
    }
}

fn oriented(
    chain: &[(usize, HPoint)],
    from: usize,
    to: usize,
) -> Result<Vec<(usize, HPoint)>, MeshError> {
    let first = chain.first().map(|(v, _)| *v);
    let last = chain.last().map(|(v, _)| *v);
    if first == Some(from) && last == Some(to) {
        Ok(chain.to_vec())
    } else if first == Some(to) && last == Some(from) {
        Ok(chain.iter().rev().cloned().collect())
    } else {
        Err(MeshError::Degenerate("chain endpoints do not match the hexagon corners".into()))
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed: BinaryHeap is a max-heap, Dijkstra wants the min.
        other.0.total_cmp(&self.0)
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Serialization view of the mesh, for `mesh-dump`.
#[derive(Serialize)]
struct DumpVertex {
    lift: [f64; 2],
    piece: usize,
    tag: RegionTag,
}

#[derive(Serialize)]
struct Dump {
    genus: usize,
    cusps: usize,
    h: f64,
    truncation: f64,
    capped: bool,
    area: f64,
    vertices: Vec<DumpVertex>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<(usize, usize, f64)>,
}

impl SurfaceMesh {
    /// Single-source shortest paths over the edge graph.
    pub fn distances_from(&self, src: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.vertices.len()];
        dist[src] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem(0.0, src));
        while let Some(HeapItem(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, l) in &self.adjacency[u] {
                let nd = d + l;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(HeapItem(nd, v));
                }
            }
        }
        dist
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.distances_from(a)[b]
    }

    /// Mark every vertex whose lift falls in one of the regions.
    pub fn mark_exclusions(&mut self, regions: &[CuspRegion]) {
        for v in &mut self.vertices {
            if v.tag == RegionTag::HyperbolicPart
                && regions.iter().any(|r| r.contains(&v.lift))
            {
                v.tag = RegionTag::Exclusion;
            }
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    /// JSON dump: vertices with lift coordinates and region tags, triangles,
    /// and edge lengths.
    pub fn dump_json(&self) -> serde_json::Value {
        let dump = Dump {
            genus: self.genus,
            cusps: self.cusps,
            h: self.h,
            truncation: self.truncation,
            capped: self.capped,
            area: self.area,
            vertices: self
                .vertices
                .iter()
                .map(|v| DumpVertex { lift: [v.lift.x, v.lift.y], piece: v.piece, tag: v.tag })
                .collect(),
            triangles: self.triangles.clone(),
            edges: self.edges.clone(),
        };
        serde_json::to_value(dump).expect("mesh serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pants::{FnCoordinates, PantsGraph};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn surface(g: usize, n: usize, l: f64, tau: f64) -> Surface {
        let graph = PantsGraph::canonical(g, n).unwrap();
        let coords = FnCoordinates::uniform(&graph, l, tau);
        Surface::assemble(graph, coords).unwrap()
    }

    #[test]
    fn closed_mesh_area_euler_and_connectivity() {
        let s = surface(2, 0, 2.0, 0.3);
        let mesh = mesh_surface(&s, 0.25).unwrap();
        let target = 4.0 * std::f64::consts::PI;
        assert!(
            (mesh.area - target).abs() < 0.01 * target,
            "mesh area {} vs {}",
            mesh.area,
            target
        );
        assert_eq!(mesh.euler_characteristic(), -2);
        // Every edge must bound exactly two triangles on a closed surface.
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &mesh.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        assert!(count.values().all(|&c| c == 2));
    }

    #[test]
    fn halving_h_quadruples_triangles() {
        let s = surface(2, 0, 2.0, 0.3);
        let coarse = mesh_surface(&s, 0.2).unwrap().triangles.len();
        let fine = mesh_surface(&s, 0.1).unwrap().triangles.len();
        assert!(
            fine >= 4 * coarse,
            "halving h: {} -> {} triangles (need at least 4x)",
            coarse,
            fine
        );
    }

    #[test]
    fn mesh_distance_tracks_surface_distance() {
        // Graph shortest paths are genuine paths on the surface, so they can
        // never undercut the true distance; the 2h slack bounds the
        // discretization overhead from above.
        let s = surface(2, 0, 2.0, 0.3);
        let h = 0.15;
        let mesh = mesh_surface(&s, h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut tested = 0;
        while tested < 10 {
            let a = rng.gen_range(0..mesh.vertices.len());
            let b = rng.gen_range(0..mesh.vertices.len());
            if a == b {
                continue;
            }
            let (la, lb) = (mesh.vertices[a].lift, mesh.vertices[b].lift);
            if la.dist(&lb) > 2.5 {
                continue;
            }
            let truth = match s.distance(&la, &lb, 4.0) {
                crate::surface::SurfaceDistance::Within(d) => d,
                crate::surface::SurfaceDistance::Beyond(_) => continue,
            };
            let dm = mesh.distance(a, b);
            assert!(dm >= truth - 1e-6, "mesh distance {} below true {}", dm, truth);
            assert!(dm <= truth + 2.0 * h, "mesh distance {} exceeds {} + 2h", dm, truth);
            tested += 1;
        }
    }

    #[test]
    fn cusped_mesh_truncates_and_caps() {
        let s = surface(1, 1, 2.0, 0.3);
        let full = 2.0 * std::f64::consts::PI;
        let eps = 0.1;
        let open = build_mesh(&s, 0.2, eps, false).unwrap();
        // The truncated part misses exactly the cusp neighbourhood area eps.
        assert!(
            (open.area - (full - eps)).abs() < 0.01 * full,
            "open area {}",
            open.area
        );
        assert_eq!(open.euler_characteristic(), -1);
        assert_eq!(open.cusp_circles.len(), 1);

        let capped = truncate_and_cap(&s, eps, 0.2).unwrap();
        assert_eq!(capped.euler_characteristic(), 0); // closed genus 1
        assert!(capped.area <= full + 100.0 * eps * eps);
        assert!(capped.area >= full - eps);
        assert!(capped.vertices.iter().any(|v| v.tag == RegionTag::Cap));
    }

    #[test]
    fn thrice_punctured_sphere_mesh() {
        let s = surface(0, 3, 2.0, 0.0);
        let eps = 0.1;
        let mesh = build_mesh(&s, 0.2, eps, false).unwrap();
        let full = 2.0 * std::f64::consts::PI;
        assert!(
            (mesh.area - (full - 3.0 * eps)).abs() < 0.01 * full,
            "area {}",
            mesh.area
        );
        assert_eq!(mesh.euler_characteristic(), -1);
        let capped = truncate_and_cap(&s, eps, 0.2).unwrap();
        assert_eq!(capped.euler_characteristic(), 2); // sphere
    }

    #[test]
    fn dump_roundtrips_counts() {
        let s = surface(2, 0, 2.0, 0.3);
        let mesh = mesh_surface(&s, 0.3).unwrap();
        let dump = mesh.dump_json();
        assert_eq!(dump["vertices"].as_array().unwrap().len(), mesh.vertices.len());
        assert_eq!(dump["triangles"].as_array().unwrap().len(), mesh.triangles.len());
        assert_eq!(dump["edges"].as_array().unwrap().len(), mesh.edges.len());
    }
}
