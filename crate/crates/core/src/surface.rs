//! Assembly of complete hyperbolic surfaces from a pants graph with
//! Fenchel-Nielsen coordinates.
//!
//! Each pants piece is developed into the plane by an isometry `dev[v]`
//! chosen along a spanning tree of the pants graph; cuff gluings compose a
//! twist along the cuff axis with the side swap `z -> -1/z`.  The surface
//! group is generated by the conjugated pants holonomies together with one
//! extra element per non-tree edge.  Area is measured numerically from the
//! right-angled hexagons (angle defect), not taken from a formula.

use crate::domain::{dirichlet_domain, DirichletDomain, DomainError};
use crate::hyperbolic::{angle_between, GeodesicTarget, HPoint, Horoball, Isometry};
use crate::pants::{FnCoordinates, PantsError, PantsGraph, PantsPiece, Slot};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::RwLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error(transparent)]
    Pants(#[from] PantsError),
    #[error("development does not close around edge {edge} (defect {defect:.3e})")]
    AssemblyInconsistent { edge: usize, defect: f64 },
    #[error("cusp id {0} out of range ({1} cusps)")]
    NoSuchCusp(usize, usize),
    #[error("horocycle length {0} exceeds the embedding bound 2")]
    CuspTooLarge(f64),
    #[error("sampling too sparse for a positive bound; retry with net spacing below {0:.3e}")]
    DensityInsufficient(f64),
    #[error("group ball did not close the fundamental domain: {0}")]
    Domain(#[from] DomainError),
}

/// A corner of the developed hexagon: a finite foot of a seam perpendicular
/// or an ideal vertex at a cusp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HexCorner {
    Finite(HPoint),
    Ideal(Option<f64>),
}

impl HexCorner {
    pub fn target(&self) -> GeodesicTarget {
        match self {
            HexCorner::Finite(p) => GeodesicTarget::Point(*p),
            HexCorner::Ideal(t) => GeodesicTarget::Ideal(*t),
        }
    }

    pub fn klein(&self) -> [f64; 2] {
        match self {
            HexCorner::Finite(p) => p.to_klein(),
            HexCorner::Ideal(Some(t)) => {
                let d = t * t + 1.0;
                [(t * t - 1.0) / d, 2.0 * t / d]
            }
            HexCorner::Ideal(None) => [1.0, 0.0],
        }
    }
}

/// One of the two mirror right-angled hexagons of a pants piece, in the
/// pants' own coordinates.  Corners `2k` and `2k + 1` lie on the axis of
/// boundary slot `k` (they coincide at the ideal point for a cusp slot);
/// side `2k -> 2k+1` is half the cuff, side `2k+1 -> 2k+2` is a seam.
#[derive(Debug, Clone)]
pub struct Hexagon {
    pub corners: [HexCorner; 6],
}

impl Hexagon {
    /// Corners with the cusp duplicates removed, in boundary order.
    pub fn distinct_corners(&self) -> Vec<HexCorner> {
        let mut out: Vec<HexCorner> = Vec::with_capacity(6);
        for c in &self.corners {
            if let (HexCorner::Ideal(a), Some(HexCorner::Ideal(b))) = (c, out.last()) {
                if a == b {
                    continue;
                }
            }
            out.push(*c);
        }
        out
    }

    /// Hyperbolic area by angle defect; ideal corners contribute zero angle.
    /// A true right-angled (possibly degenerate) hexagon measures exactly pi.
    pub fn area(&self) -> f64 {
        let cs = self.distinct_corners();
        let m = cs.len();
        let mut angles = 0.0;
        for i in 0..m {
            if let HexCorner::Finite(p) = cs[i] {
                let prev = cs[(i + m - 1) % m].target();
                let next = cs[(i + 1) % m].target();
                angles += angle_between(&p, &prev, &next);
            }
        }
        (m as f64 - 2.0) * std::f64::consts::PI - angles
    }
}

/// Foot on the axis of slot `on` of the perpendicular toward boundary
/// object `toward`, in pants-local coordinates.
pub(crate) fn foot_on_axis(piece: &PantsPiece, on: usize, toward: usize) -> HPoint {
    let frame = piece.frames[on].expect("foot requested on a cusp slot");
    let inv = frame.inverse();
    let rho = if piece.boundary_lengths[toward] > 0.0 {
        let (u, v) = piece.delta[toward].axis_endpoints().expect("hyperbolic");
        let u = inv.apply_boundary(u).expect("axes of a pants share no ideal point");
        let v = inv.apply_boundary(v).expect("axes of a pants share no ideal point");
        debug_assert!(u * v > 0.0, "boundary axes must not cross");
        (u * v).sqrt()
    } else {
        let w = piece.delta[toward].parabolic_fixed_point().expect("parabolic");
        let w = inv.apply_boundary(w).expect("cusp point off the axis");
        w.abs()
    };
    frame.apply(&HPoint { x: 0.0, y: rho })
}

/// The base hexagon of a pants piece in its local coordinates.
pub fn pants_hexagon(piece: &PantsPiece) -> Hexagon {
    let mut corners = [HexCorner::Ideal(None); 6];
    for k in 0..3 {
        let (prev, next) = ((k + 2) % 3, (k + 1) % 3);
        if piece.boundary_lengths[k] > 0.0 {
            corners[2 * k] = HexCorner::Finite(foot_on_axis(piece, k, prev));
            corners[2 * k + 1] = HexCorner::Finite(foot_on_axis(piece, k, next));
        } else {
            let fp = piece.delta[k].parabolic_fixed_point().expect("cusp slot");
            corners[2 * k] = HexCorner::Ideal(fp);
            corners[2 * k + 1] = HexCorner::Ideal(fp);
        }
    }
    Hexagon { corners }
}

/// An embedded cusp neighborhood: the quotient of a horoball.  In the frame
/// coordinates the cusp sits at infinity with holonomy `z -> z ± 1`, so the
/// region is `{ p : frame(p).y >= 1 / epsilon }` and its boundary horocycle
/// has length exactly `epsilon`.
#[derive(Debug, Clone)]
pub struct CuspRegion {
    pub cusp: usize,
    pub epsilon: f64,
    pub frame: Isometry,
    pub holonomy: Isometry,
}

impl CuspRegion {
    pub fn contains(&self, p: &HPoint) -> bool {
        self.frame.apply(p).y >= 1.0 / self.epsilon
    }

    /// Signed penetration depth of a point into the region (positive inside).
    pub fn depth(&self, p: &HPoint) -> f64 {
        (self.frame.apply(p).y * self.epsilon).ln()
    }

    /// The defining horoball in surface coordinates.
    pub fn horoball(&self) -> Horoball {
        Horoball { base: None, size: 1.0 / self.epsilon }.apply(&self.frame.inverse())
    }
}

/// Distance between the boundary horocycles of two nested neighborhoods of
/// the same cusp.
pub fn horocycle_distance(eps_outer: f64, eps_inner: f64) -> f64 {
    (eps_outer / eps_inner).ln()
}

/// How far the group ball breadth-first search expands beyond the requested
/// displacement radius, so that prefixes of short words are not pruned away.
const BALL_SLACK: f64 = 4.0;

/// Hard cap on enumerated elements per ball query.
const BALL_CAP: usize = 400_000;

/// Displacements below this are rounding artifacts, not real loops; every
/// surface built here has systole well above it.
const LOOP_FLOOR: f64 = 2e-2;

/// Long words that cancel back to the identity come out as near-identity
/// matrices with the noise concentrated in the parabolic directions (the
/// determinant pins the trace near 2).  Real hyperbolic elements keep
/// `|tr| >= 2 cosh(systole / 2)` and real parabolics of any visible size
/// have entries far from the identity, so the combination is safe to drop.
fn is_identity_artifact(g: &Isometry) -> bool {
    ((g.a + g.d).abs() - 2.0).abs() < 1e-6 && g.is_identity(0.05)
}


/// `z -> (z - x) / y`: moves `p` to `i`.  Ball enumeration about a deep
/// point must be conjugated through this, or the absolute dedup quantum
/// stops resolving distinct elements.
pub(crate) fn normalizer(p: &HPoint) -> Isometry {
    let sy = p.y.sqrt();
    Isometry::from_entries(1.0 / sy, -p.x / sy, 0.0, sy).unwrap()
}

/// Result of a cutoff-bounded distance query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceDistance {
    /// True distance, certified below the cutoff.
    Within(f64),
    /// Only known to exceed the cutoff.
    Beyond(f64),
}

impl SurfaceDistance {
    pub fn value(&self) -> f64 {
        match self {
            SurfaceDistance::Within(d) | SurfaceDistance::Beyond(d) => *d,
        }
    }

    pub fn is_within(&self) -> bool {
        matches!(self, SurfaceDistance::Within(_))
    }
}

struct BallCache {
    radius: f64,
    elements: Vec<Isometry>,
}

/// A complete hyperbolic surface of genus `g` with `n` cusps, assembled from
/// Fenchel-Nielsen data.  Immutable after assembly; queries are pure.
pub struct Surface {
    pub graph: PantsGraph,
    pub coords: FnCoordinates,
    pub pieces: Vec<PantsPiece>,
    /// Developing isometry per pants (pants-local to surface coordinates).
    pub dev: Vec<Isometry>,
    /// Conjugated pants holonomy generators plus one element per non-tree
    /// edge; closed under nothing, but generating.
    pub generators: Vec<Isometry>,
    pub g: usize,
    pub n: usize,
    /// Area measured from the hexagon angle defects.
    pub area: f64,
    pub basepoint: HPoint,
    /// `(pants, slot)` per cusp id, in lexicographic order.
    pub cusp_slots: Vec<(usize, usize)>,
    ball: RwLock<BallCache>,
}

/// JSON surface specification shipped with the repo.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub genus: usize,
    pub cusps: usize,
    /// Internal edges as pairs of (pants, slot) ends.
    pub graph: Vec<[[usize; 2]; 2]>,
    pub lengths: Vec<f64>,
    pub twists: Vec<f64>,
}

impl SurfaceSpec {
    pub fn from_parts(graph: &PantsGraph, coords: &FnCoordinates) -> SurfaceSpec {
        SurfaceSpec {
            genus: graph.genus(),
            cusps: graph.cusps(),
            graph: graph.edges.iter().map(|e| [[e[0].0, e[0].1], [e[1].0, e[1].1]]).collect(),
            lengths: coords.lengths.clone(),
            twists: coords.twists.clone(),
        }
    }

    pub fn to_parts(&self) -> Result<(PantsGraph, FnCoordinates), PantsError> {
        let vertices = self
            .graph
            .iter()
            .flat_map(|e| e.iter().map(|end| end[0]))
            .max()
            .map(|m| m + 1)
            .unwrap_or(0);
        let mut pants = vec![[Slot::Cusp; 3]; vertices];
        let mut edges = Vec::with_capacity(self.graph.len());
        for (i, e) in self.graph.iter().enumerate() {
            for end in e {
                if end[0] >= vertices || end[1] >= 3 {
                    return Err(PantsError::BadEdge(i));
                }
                pants[end[0]][end[1]] = Slot::Edge(i);
            }
            edges.push([(e[0][0], e[0][1]), (e[1][0], e[1][1])]);
        }
        let graph = PantsGraph { pants, edges };
        let coords = FnCoordinates { lengths: self.lengths.clone(), twists: self.twists.clone() };
        graph.validate()?;
        coords.validate(&graph)?;
        if graph.genus() != self.genus || graph.cusps() != self.cusps {
            return Err(PantsError::TooSmall { g: self.genus, n: self.cusps });
        }
        Ok((graph, coords))
    }
}

/// The side swap across a cuff axis: `z -> -1/z` exchanges the two half
/// planes bounded by the imaginary axis and reverses direction along it.
fn side_swap() -> Isometry {
    Isometry { a: 0.0, b: -1.0, c: 1.0, d: 0.0 }
}

/// Cuff gluing for edge `e`, mapping the coordinates of the pants at
/// `ends[1]` into the coordinates of the pants at `ends[0]`.
pub(crate) fn gluing(
    pieces: &[PantsPiece],
    ends: [(usize, usize); 2],
    length: f64,
    twist: f64,
) -> Isometry {
    let _ = length;
    let f_p = pieces[ends[0].0].frames[ends[0].1].expect("internal cuff has a frame");
    let f_q = pieces[ends[1].0].frames[ends[1].1].expect("internal cuff has a frame");
    f_p.compose(&Isometry::axis_translation(twist))
        .compose(&side_swap())
        .compose(&f_q.inverse())
}

fn canonical_entries(g: &Isometry) -> [f64; 4] {
    let e = [g.a, g.b, g.c, g.d];
    let mut best = 0usize;
    for i in 1..4 {
        if e[i].abs() > e[best].abs() {
            best = i;
        }
    }
    if e[best] < 0.0 {
        [-e[0], -e[1], -e[2], -e[3]]
    } else {
        e
    }
}

/// Dedup quantum for group elements: long words carry rounding noise well
/// above machine epsilon, while distinct elements of the surface groups
/// built here are separated by many orders of magnitude more than this.
const DEDUP_QUANTUM: f64 = 1e-5;

fn quantized_key(g: &Isometry) -> [i64; 4] {
    let e = canonical_entries(g);
    let mut k = [0i64; 4];
    for i in 0..4 {
        k[i] = (e[i] / DEDUP_QUANTUM).round() as i64;
    }
    k
}

/// Occupied-bin set with a neighbor check, so that two copies of the same
/// element landing near a bin boundary still collide.
#[derive(Default)]
struct ElementSet {
    bins: HashMap<[i64; 4], ()>,
}

impl ElementSet {
    fn insert(&mut self, g: &Isometry) -> bool {
        let k = quantized_key(g);
        let mut d = [0i64; 4];
        for i0 in -1..=1 {
            d[0] = i0;
            for i1 in -1..=1 {
                d[1] = i1;
                for i2 in -1..=1 {
                    d[2] = i2;
                    for i3 in -1..=1 {
                        d[3] = i3;
                        let key = [k[0] + d[0], k[1] + d[1], k[2] + d[2], k[3] + d[3]];
                        if self.bins.contains_key(&key) {
                            return false;
                        }
                    }
                }
            }
        }
        self.bins.insert(k, ());
        true
    }

    fn len(&self) -> usize {
        self.bins.len()
    }
}

impl Surface {
    /// Builds the surface.  Fails if the developed cuff holonomies do not
    /// match across any edge (development closure within 1e-8).
    pub fn assemble(graph: PantsGraph, coords: FnCoordinates) -> Result<Surface, SurfaceError> {
        graph.validate()?;
        coords.validate(&graph)?;
        let g = graph.genus();
        let n = graph.cusps();

        // Realize each pants with its three boundary lengths (0 = cusp).
        let mut pieces = Vec::with_capacity(graph.pants.len());
        for slots in &graph.pants {
            let mut lengths = [0.0; 3];
            for (k, s) in slots.iter().enumerate() {
                if let Slot::Edge(e) = s {
                    lengths[k] = coords.lengths[*e];
                }
            }
            pieces.push(PantsPiece::build(lengths)?);
        }

        // Develop along a breadth-first spanning tree.
        let v = graph.pants.len();
        let mut dev: Vec<Option<Isometry>> = vec![None; v];
        dev[0] = Some(Isometry::identity());
        let mut tree_edge = vec![false; graph.edges.len()];
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(p) = queue.pop_front() {
            for slot in &graph.pants[p] {
                if let Slot::Edge(e) = slot {
                    let ends = graph.edges[*e];
                    let (near, far) = if ends[0].0 == p { (0, 1) } else { (1, 0) };
                    let other = ends[far].0;
                    if dev[other].is_some() {
                        continue;
                    }
                    let glue = gluing(&pieces, ends, coords.lengths[*e], coords.twists[*e]);
                    let phi_p = dev[p].unwrap();
                    dev[other] = Some(if near == 0 {
                        phi_p.compose(&glue)
                    } else {
                        phi_p.compose(&glue.inverse())
                    });
                    tree_edge[*e] = true;
                    queue.push_back(other);
                }
            }
        }
        let dev: Vec<Isometry> = dev.into_iter().map(|d| d.expect("graph connected")).collect();

        // Generators: conjugated pants holonomies plus non-tree gluings.
        let mut generators = Vec::new();
        for (p, piece) in pieces.iter().enumerate() {
            for gen in &piece.generators {
                generators.push(dev[p].compose(gen).compose(&dev[p].inverse()));
            }
        }
        for (e, ends) in graph.edges.iter().enumerate() {
            if tree_edge[e] {
                continue;
            }
            let glue = gluing(&pieces, *ends, coords.lengths[e], coords.twists[e]);
            let t = dev[ends[0].0].compose(&glue).compose(&dev[ends[1].0].inverse());
            generators.push(t);
        }

        // Development closure: across every edge the conjugated cuff
        // holonomies must be inverse to each other.
        for (e, ends) in graph.edges.iter().enumerate() {
            let (p, i) = ends[0];
            let (q, j) = ends[1];
            // The gluing must conjugate the far cuff holonomy to the inverse
            // of the near one.  Conjugation by the developing maps cancels,
            // so the relation is checked in local coordinates where all
            // entries are well conditioned.
            let glue = gluing(&pieces, *ends, coords.lengths[e], coords.twists[e]);
            let closed = glue
                .compose(&pieces[q].delta[j])
                .compose(&glue.inverse())
                .compose(&pieces[p].delta[i]);
            if !closed.is_identity(1e-8) {
                let defect = (closed.a - 1.0).abs().max(closed.b.abs()).max(closed.c.abs());
                return Err(SurfaceError::AssemblyInconsistent { edge: e, defect });
            }
        }

        // Measured area: two mirror hexagons per pants.
        let area: f64 = pieces.iter().map(|piece| 2.0 * pants_hexagon(piece).area()).sum();

        // Basepoint: a generic interior point of the root pants.
        let basepoint = {
            let piece = &pieces[0];
            let geodesic = (0..3).find(|&k| piece.boundary_lengths[k] > 0.0);
            let raw = match geodesic {
                Some(k) => {
                    let other = (0..3).find(|&j| j != k).unwrap();
                    let frame = piece.frames[k].unwrap();
                    let rho = frame.inverse().apply(&foot_on_axis(piece, k, other)).y;
                    // A short step off the axis toward the interior (x < 0).
                    frame.apply(&HPoint { x: -0.3 * rho, y: 0.95 * rho })
                }
                None => HPoint { x: -0.4131, y: 1.0273 },
            };
            let phi = dev[0];
            phi.apply(&HPoint { x: raw.x + 0.00137 * raw.y, y: raw.y })
        };

        let mut cusp_slots = Vec::new();
        for (p, slots) in graph.pants.iter().enumerate() {
            for (k, s) in slots.iter().enumerate() {
                if *s == Slot::Cusp {
                    cusp_slots.push((p, k));
                }
            }
        }

        Ok(Surface {
            graph,
            coords,
            pieces,
            dev,
            generators,
            g,
            n,
            area,
            basepoint,
            cusp_slots,
            ball: RwLock::new(BallCache { radius: -1.0, elements: Vec::new() }),
        })
    }

    fn symbols(&self) -> Vec<Isometry> {
        let mut syms = Vec::with_capacity(2 * self.generators.len());
        for g in &self.generators {
            syms.push(*g);
            syms.push(g.inverse());
        }
        syms
    }

    /// All group elements `t` with displacement `d(x, t x) <= radius`,
    /// enumerated breadth-first with pruning at `radius + BALL_SLACK`.
    /// Truncated at `BALL_CAP` elements (queries then degrade to bounds).
    pub fn elements_near(&self, x: &HPoint, radius: f64) -> Vec<Isometry> {
        self.elements_near_sym(&self.symbols(), x, radius)
    }

    /// Same ball enumeration over an arbitrary symbol set; callers conjugate
    /// the generators into a well-conditioned frame first, since the dedup
    /// quantum is absolute on the matrix entries.
    fn elements_near_sym(&self, syms: &[Isometry], x: &HPoint, radius: f64) -> Vec<Isometry> {
        let mut seen = ElementSet::default();
        seen.insert(&Isometry::identity());
        let mut kept = Vec::new();
        let mut frontier = vec![Isometry::identity()];
        let prune = radius + BALL_SLACK;
        while !frontier.is_empty() && seen.len() < BALL_CAP {
            let mut next = Vec::new();
            for f in &frontier {
                for s in syms {
                    let h = f.compose(s);
                    if h.displacement(x) > prune {
                        continue;
                    }
                    // Expanding a noisy identity would replay the whole tree
                    // shifted by that noise.
                    if is_identity_artifact(&h) {
                        continue;
                    }
                    if !seen.insert(&h) {
                        continue;
                    }
                    if h.displacement(x) <= radius {
                        kept.push(h);
                    }
                    next.push(h);
                    if seen.len() >= BALL_CAP {
                        break;
                    }
                }
            }
            frontier = next;
        }
        kept
    }

    /// Cached displacement ball about the basepoint.
    pub fn ball_elements(&self, radius: f64) -> Vec<Isometry> {
        {
            let cache = self.ball.read().unwrap();
            if cache.radius >= radius {
                return cache
                    .elements
                    .iter()
                    .filter(|g| g.displacement(&self.basepoint) <= radius)
                    .cloned()
                    .collect();
            }
        }
        let elements = self.elements_near(&self.basepoint, radius);
        let mut cache = self.ball.write().unwrap();
        if radius > cache.radius {
            *cache = BallCache { radius, elements: elements.clone() };
        }
        elements
    }

    /// Intrinsic distance between two lifted points, by minimizing over
    /// group translates, certified only below the cutoff.
    pub fn distance(&self, p: &HPoint, q: &HPoint, cutoff: f64) -> SurfaceDistance {
        let mut best = p.dist(q);
        if best == 0.0 {
            return SurfaceDistance::Within(0.0);
        }
        // Any improving translate t satisfies d(p, t p) <= 2 min(best, cutoff),
        // so a single displacement ball at p suffices.  Work in the frame
        // centered at p so the enumeration stays well conditioned.
        let norm = normalizer(p);
        let csyms: Vec<Isometry> = self
            .symbols()
            .iter()
            .map(|s| norm.compose(s).compose(&norm.inverse()))
            .collect();
        let origin = HPoint::i();
        let qn = norm.apply(q);
        let radius = 2.0 * best.min(cutoff) + 0.5;
        for t in self.elements_near_sym(&csyms, &origin, radius) {
            let d = origin.dist(&t.apply(&qn));
            if d < best {
                best = d;
            }
        }
        if best <= cutoff {
            SurfaceDistance::Within(best)
        } else {
            SurfaceDistance::Beyond(cutoff)
        }
    }

    /// Half the length of the shortest geodesic loop through `x`.
    pub fn half_systole_at(&self, x: &HPoint) -> f64 {
        // Some generator already gives a loop through x, so one ball of that
        // radius is guaranteed to contain the minimizer.
        let norm = normalizer(x);
        let csyms: Vec<Isometry> = self
            .symbols()
            .iter()
            .map(|s| norm.compose(s).compose(&norm.inverse()))
            .collect();
        let origin = HPoint::i();
        let radius = self.single_symbol_loop(x);
        let min = self
            .elements_near_sym(&csyms, &origin, radius)
            .iter()
            .map(|g| g.displacement(&origin))
            .filter(|d| *d >= LOOP_FLOOR)
            .fold(radius, f64::min);
        min / 2.0
    }

    /// Embedded cusp neighborhood with boundary horocycle length `epsilon`.
    pub fn cusp_neighborhood(&self, cusp: usize, epsilon: f64) -> Result<CuspRegion, SurfaceError> {
        if cusp >= self.n {
            return Err(SurfaceError::NoSuchCusp(cusp, self.n));
        }
        if !(epsilon > 0.0 && epsilon <= 2.0) {
            return Err(SurfaceError::CuspTooLarge(epsilon));
        }
        let (p, k) = self.cusp_slots[cusp];
        let holonomy = self.dev[p]
            .compose(&self.pieces[p].delta[k])
            .compose(&self.dev[p].inverse());
        // Frame sending the fixed point to infinity...
        let fp = holonomy.parabolic_fixed_point().expect("cusp slot is parabolic");
        let to_inf = match fp {
            None => Isometry::identity(),
            Some(u) => Isometry::from_entries(0.0, -1.0, 1.0, -u).expect("det 1"),
        };
        // ...then scaled so the holonomy is z -> z +- 1: diag(a, 1/a)
        // multiplies translation amounts by a^2.
        let w = to_inf.compose(&holonomy).compose(&to_inf.inverse());
        let shift = (w.b / w.a).abs();
        debug_assert!(shift > 0.0);
        let a = 1.0 / shift.sqrt();
        let scale = Isometry::from_entries(a, 0.0, 0.0, 1.0 / a).expect("det 1");
        let frame = scale.compose(&to_inf);
        let check = frame.compose(&holonomy).compose(&frame.inverse());
        debug_assert!(((check.b / check.a).abs() - 1.0).abs() < 1e-9);
        Ok(CuspRegion { cusp, epsilon, frame, holonomy })
    }

    /// Sampled verification that a family of cusp regions is pairwise
    /// disjoint, via horoball separation over a group ball.
    pub fn cusp_regions_disjoint(&self, regions: &[CuspRegion], ball_radius: f64) -> bool {
        let balls: Vec<Horoball> = regions.iter().map(|r| r.horoball()).collect();
        let elements = self.ball_elements(ball_radius);
        for (i, a) in balls.iter().enumerate() {
            for (j, b) in balls.iter().enumerate() {
                if i < j && !a.disjoint_from(b, 1e-9) {
                    return false;
                }
                for g in &elements {
                    if i == j {
                        // Skip the cusp's own stabilizer (it fixes the ball).
                        let moved = b.apply(g);
                        let same = match (b.base, moved.base) {
                            (None, None) => true,
                            (Some(x), Some(y)) => (x - y).abs() < 1e-9,
                            _ => false,
                        };
                        if same {
                            continue;
                        }
                        if !a.disjoint_from(&moved, 1e-9) {
                            return false;
                        }
                    } else if !a.disjoint_from(&b.apply(g), 1e-9) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Minimal displacement of the sample point over single generator
    /// symbols: a cheap upper bound for the shortest loop through it, used
    /// to size the adaptive sampling.
    fn single_symbol_loop(&self, x: &HPoint) -> f64 {
        self.generators
            .iter()
            .map(|g| g.displacement(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Frame and circle radius of the reflection through one seam of the
    /// pants (in frame coordinates the seam is the circle `|z| = rho`).
    /// All-cusp pants have no finite slot to anchor a frame; their two ideal
    /// triangles are exactly isometric, so sampling one suffices.
    pub(crate) fn mirror_parts(&self, pants: usize) -> Option<(Isometry, f64)> {
        let piece = &self.pieces[pants];
        let seam_slot = (0..3).find(|&k| piece.boundary_lengths[k] > 0.0)?;
        let frame = piece.frames[seam_slot].unwrap();
        let rho =
            frame.inverse().apply(&foot_on_axis(piece, seam_slot, (seam_slot + 1) % 3)).y;
        Some((frame, rho))
    }

    /// Both pants-local points representing a hexagon point on the surface:
    /// the point itself and its mirror through one seam (together the two
    /// hexagons cover the pants).
    fn hexagon_locals(&self, pants: usize, local: &HPoint) -> Vec<HPoint> {
        let mut out = vec![*local];
        if let Some((frame, rho)) = self.mirror_parts(pants) {
            let r = crate::hyperbolic::Reflection::in_circle(0.0, rho);
            out.push(frame.apply(&r.apply(&frame.inverse().apply(local))));
        }
        out
    }

    /// Certified-margin lower bound for the injectivity radius outside the
    /// excluded cusp regions.  The surface is sampled by an adaptive
    /// quadtree per hexagon (leaf size tied to the locally observed loop
    /// lengths); since the injectivity radius is 1-Lipschitz, the bound
    /// `min over leaves (half shortest loop at center - leaf diameter)`
    /// holds at every covered point.  Cusp ends must be covered by the
    /// exclusions or the refinement cannot terminate.
    pub fn injectivity_radius_lower_bound(
        &self,
        excluded: &[CuspRegion],
    ) -> Result<f64, SurfaceError> {
        const MAX_DEPTH: usize = 80;
        let mut bound = f64::INFINITY;
        let mut sampled = false;
        // Scale past which leaf values cannot matter: some sampled leaf sits
        // on a cuff axis, so the result never exceeds half the shortest cuff.
        let cap_t = self
            .coords
            .lengths
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            .min(2.0)
            + 0.5;
        let ball_r = cap_t + 1.0;
        for (p, piece) in self.pieces.iter().enumerate() {
            let hex = pants_hexagon(piece);
            // Re-center the hexagon at i so the quadtree works far from the
            // Klein boundary (pants-local coordinates can sit very deep).
            let finite: Vec<HPoint> = hex
                .corners
                .iter()
                .filter_map(|c| match c {
                    HexCorner::Finite(q) => Some(*q),
                    HexCorner::Ideal(_) => None,
                })
                .collect();
            let center = match finite.len() {
                0 => HPoint { x: 0.1, y: 1.3 },
                1 => finite[0],
                _ => {
                    let far = finite
                        .iter()
                        .skip(1)
                        .max_by(|a, b| {
                            finite[0].dist(a).partial_cmp(&finite[0].dist(b)).unwrap()
                        })
                        .unwrap();
                    crate::hyperbolic::GeodesicArc::between(&finite[0], far)
                        .map(|arc| arc.eval(0.5))
                        .unwrap_or(finite[0])
                }
            };
            // z -> (z - x) / y maps the center to i.
            let norm = normalizer(&center);
            let poly: Vec<[f64; 2]> = hex
                .distinct_corners()
                .iter()
                .map(|c| match c {
                    HexCorner::Finite(q) => norm.apply(q).to_klein(),
                    HexCorner::Ideal(t) => HexCorner::Ideal(norm.apply_boundary(*t)).klein(),
                })
                .collect();
            let unnorm = norm.inverse();
            // Cusp exclusions pulled back to tree coordinates, one conic per
            // (region, lift map).  In a cusp frame 1/Im is linear on the
            // hyperboloid, so with `u(k)` the induced affine form on Klein
            // coordinates the excluded horoball is exactly
            // `u(k)^2 <= eps^2 (1 - |k|^2)`; it is convex, so a cell is
            // inside iff its corners are.  Without this the refinement could
            // not terminate at the ideal hexagon corners.
            let mut excl_conics: Vec<(f64, [f64; 3])> = Vec::new();
            for region in excluded {
                let g = region.frame.compose(&self.dev[p]).compose(&unnorm);
                excl_conics.push((
                    region.epsilon,
                    [g.c * g.c + g.d * g.d, g.c * g.c - g.d * g.d, 2.0 * g.c * g.d],
                ));
                if let Some((frame, rho)) = self.mirror_parts(p) {
                    // The mirror lift is anti-holomorphic: factor it as a
                    // Moebius map following z -> -conj(z), which negates the
                    // X2 hyperboloid coordinate.
                    let b = Isometry::from_entries(0.0, -rho, 1.0 / rho, 0.0).unwrap();
                    let c = frame.inverse().compose(&unnorm);
                    let c = Isometry::from_entries(c.a, -c.b, -c.c, c.d).unwrap();
                    let g = region
                        .frame
                        .compose(&self.dev[p])
                        .compose(&frame)
                        .compose(&b)
                        .compose(&c);
                    excl_conics.push((
                        region.epsilon,
                        [g.c * g.c + g.d * g.d, g.c * g.c - g.d * g.d, -2.0 * g.c * g.d],
                    ));
                }
            }
            // All displacement work happens in the normalized frame: the
            // generators are conjugated by `norm . dev^-1`, which keeps the
            // matrix entries of modest size (the dedup quantum in the ball
            // enumeration is absolute, so deep lifts would defeat it).
            let conj = norm.compose(&self.dev[p].inverse());
            let conj_inv = conj.inverse();
            let csyms: Vec<Isometry> = self
                .symbols()
                .iter()
                .map(|g| conj.compose(g).compose(&conj_inv))
                .collect();
            let ssl_at = |x: &HPoint| -> f64 {
                csyms.iter().map(|g| g.displacement(x)).fold(f64::INFINITY, f64::min)
            };
            // Lazy cache of displacement balls: a query is served by a
            // cached ball within 0.5 or triggers a fresh one at the query
            // point, so the scan reach stays below `ball_r` and the
            // enumerations never grow past the scale where collar-crossing
            // words pile up.  Balls are sorted by displacement at their
            // center; a loop of length m through x shows up within
            // m + 2 d(center, x) there.
            let mut cache: Vec<(HPoint, Vec<(f64, Isometry)>)> = Vec::new();
            let mut min_loop_at = |x: &HPoint, ssl: f64, clamp: f64| -> f64 {
                let s = ssl.min(cap_t).min(clamp);
                let near = cache
                    .iter()
                    .enumerate()
                    .map(|(j, (c, _))| (j, c.dist(x)))
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
                let (j, dc_x) = match near {
                    Some((j, d)) if d <= 0.5 => (j, d),
                    _ => {
                        let mut elems: Vec<(f64, Isometry)> = self
                            .elements_near_sym(&csyms, x, ball_r)
                            .into_iter()
                            .map(|g| (g.displacement(x), g))
                            .collect();
                        elems.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                        cache.push((*x, elems));
                        (cache.len() - 1, 0.0)
                    }
                };
                let reach = s + 2.0 * dc_x + 1e-9;
                let mut m = s;
                for (dc, g) in cache[j].1.iter() {
                    if *dc > reach {
                        break;
                    }
                    let d = g.displacement(x);
                    if d >= LOOP_FLOOR {
                        m = m.min(d);
                    }
                }
                m
            };
            // Seed the running minimum at a net over the hexagon boundary
            // plus the center (the cuff axes run through the corners, so
            // this is usually where the minimum lives); extra minima only
            // make the final bound more conservative.
            let mut sites: Vec<HPoint> = vec![center];
            sites.extend(finite.iter().cloned());
            for k in 0..6 {
                if let (HexCorner::Finite(a), HexCorner::Finite(b)) =
                    (hex.corners[k], hex.corners[(k + 1) % 6])
                {
                    if let Ok(arc) = crate::hyperbolic::GeodesicArc::between(&a, &b) {
                        // Spaced about unit distance apart so oracle radii
                        // stay small.
                        let steps = (arc.length.ceil() as usize).max(1);
                        for s in 1..steps {
                            sites.push(arc.eval(s as f64 / steps as f64));
                        }
                    }
                }
            }
            for q in &sites {
                for l in self.hexagon_locals(p, q) {
                    let x = norm.apply(&l);
                    let ssl = ssl_at(&x);
                    bound = bound.min(min_loop_at(&x, ssl, f64::INFINITY) / 2.0);
                }
            }
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for k in &poly {
                for a in 0..2 {
                    lo[a] = lo[a].min(k[a]);
                    hi[a] = hi[a].max(k[a]);
                }
            }
            let mut stack = vec![(lo, hi, 0usize)];
            while let Some((lo, hi, depth)) = stack.pop() {
                if !rect_intersects_convex(lo, hi, &poly) {
                    continue;
                }
                // Entirely outside the Klein disc: nothing there.
                let near = [0.0_f64.clamp(lo[0], hi[0]), 0.0_f64.clamp(lo[1], hi[1])];
                let rmin = (near[0] * near[0] + near[1] * near[1]).sqrt();
                if rmin >= 1.0 {
                    continue;
                }
                if !excl_conics.is_empty() {
                    let cell = clip_rect_to_poly(lo, hi, &poly);
                    if cell.is_empty() {
                        continue;
                    }
                    let covered = excl_conics.iter().any(|(eps, l)| {
                        // Slack absorbs the cancellation at the tangent
                        // point (the ideal corner itself evaluates to 0 = 0).
                        let tol = 1e-12 * (l[0].abs() + l[1].abs() + l[2].abs()).powi(2);
                        cell.iter().all(|k| {
                            let u = l[0] + l[1] * k[0] + l[2] * k[1];
                            let s = 1.0 - k[0] * k[0] - k[1] * k[1];
                            u * u - eps * eps * s <= tol
                        })
                    });
                    if covered {
                        continue;
                    }
                }
                let subdivide = |stack: &mut Vec<([f64; 2], [f64; 2], usize)>| {
                    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
                    stack.push(([lo[0], lo[1]], [mid[0], mid[1]], depth + 1));
                    stack.push(([mid[0], lo[1]], [hi[0], mid[1]], depth + 1));
                    stack.push(([lo[0], mid[1]], [mid[0], hi[1]], depth + 1));
                    stack.push(([mid[0], mid[1]], [hi[0], hi[1]], depth + 1));
                };
                let corners = [
                    [lo[0], lo[1]],
                    [hi[0], lo[1]],
                    [lo[0], hi[1]],
                    [hi[0], hi[1]],
                ];
                let rmax = corners
                    .iter()
                    .map(|c| (c[0] * c[0] + c[1] * c[1]).sqrt())
                    .fold(0.0, f64::max);
                let center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
                let rc = (center[0] * center[0] + center[1] * center[1]).sqrt();
                let cell_ok = rmax < 1.0 - 1e-12 && rc < 1.0 - 1e-9;
                let diag_e = std::f64::consts::SQRT_2 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
                if !cell_ok {
                    if depth >= MAX_DEPTH {
                        return Err(SurfaceError::DensityInsufficient(diag_e / 4.0));
                    }
                    subdivide(&mut stack);
                    continue;
                }
                // Exact hyperbolic diameter: Klein cells are hyperbolically
                // convex, so the diameter is attained at a pair of corners.
                let kd = |a: &[f64; 2], b: &[f64; 2]| -> f64 {
                    let na = 1.0 - a[0] * a[0] - a[1] * a[1];
                    let nb = 1.0 - b[0] * b[0] - b[1] * b[1];
                    let ip = 1.0 - a[0] * b[0] - a[1] * b[1];
                    (ip / (na * nb).sqrt()).max(1.0).acosh()
                };
                let mut diag_h = 0.0_f64;
                for i in 0..4 {
                    for j in i + 1..4 {
                        diag_h = diag_h.max(kd(&corners[i], &corners[j]));
                    }
                }
                // Refine along the hyperbolically longer side only; square
                // Klein cells near the boundary are radially stretched and
                // quadrisection would over-refine the tangential direction.
                let split = |stack: &mut Vec<([f64; 2], [f64; 2], usize)>| {
                    let w_h = kd(&corners[0], &corners[1]).max(kd(&corners[2], &corners[3]));
                    let h_h = kd(&corners[0], &corners[2]).max(kd(&corners[1], &corners[3]));
                    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
                    if w_h >= h_h {
                        stack.push((lo, [mid[0], hi[1]], depth + 1));
                        stack.push(([mid[0], lo[1]], hi, depth + 1));
                    } else {
                        stack.push((lo, [hi[0], mid[1]], depth + 1));
                        stack.push(([lo[0], mid[1]], hi, depth + 1));
                    }
                };
                let local = unnorm.apply(&HPoint::from_klein(center).unwrap());
                let locals = self.hexagon_locals(p, &local);
                let xqs: Vec<HPoint> = locals.iter().map(|q| norm.apply(q)).collect();
                let lifts: Vec<HPoint> =
                    locals.iter().map(|q| self.dev[p].apply(q)).collect();
                // Skip cells buried in an exclusion by more than the cell
                // size (their boundary strip is covered by neighbors).
                let active: Vec<(usize, &HPoint)> = lifts
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| !excluded.iter().any(|r| r.depth(x) > diag_h))
                    .collect();
                if active.is_empty() {
                    continue;
                }
                // Collar shortcut: inside the standard collar of a boundary
                // cuff, a loop either stays in the cuff's free homotopy
                // powers (shortest: the core holonomy) or crosses the collar
                // boundary twice.  When the crossing bound dominates, the
                // core displacement is the exact minimum; otherwise the
                // crossing bound is still a certified floor.
                let mut exacts: Vec<Option<f64>> = Vec::with_capacity(active.len());
                let mut floors: Vec<f64> = Vec::with_capacity(active.len());
                for (i, _) in &active {
                    let lp = &locals[*i];
                    let mut exact: Option<f64> = None;
                    let mut floor = 0.0_f64;
                    for k in 0..3 {
                        let ell = piece.boundary_lengths[k];
                        if ell <= 0.0 {
                            continue;
                        }
                        let q = piece.frames[k].unwrap().inverse().apply(lp);
                        let dax = ((q.x * q.x + q.y * q.y).sqrt() / q.y).max(1.0).acosh();
                        let w = (1.0 / (ell / 2.0).sinh()).asinh();
                        if dax < w {
                            let core = piece.delta[k].displacement(lp);
                            let exit = 2.0 * (w - dax);
                            if exit >= core {
                                exact = Some(exact.map_or(core, |e| e.min(core)));
                            } else {
                                floor = floor.max(exit);
                            }
                        }
                    }
                    exacts.push(exact);
                    floors.push(floor);
                }
                let ssls: Vec<f64> =
                    active.iter().map(|(i, _)| ssl_at(&xqs[*i])).collect();
                let need = ssls
                    .iter()
                    .zip(&exacts)
                    .map(|(ssl, e)| e.unwrap_or(*ssl))
                    .fold(f64::INFINITY, f64::min)
                    / 4.0;
                if diag_h > need {
                    if depth >= MAX_DEPTH {
                        return Err(SurfaceError::DensityInsufficient(diag_e / 4.0));
                    }
                    split(&mut stack);
                    continue;
                }
                let clamp = 2.0 * (bound + diag_h) + 1e-9;
                let mut leaf_bound = f64::INFINITY;
                let mut leaf_m = f64::INFINITY;
                for (j, ((i, _), ssl)) in active.iter().zip(&ssls).enumerate() {
                    let m = if let Some(e) = exacts[j] {
                        e
                    } else if floors[j] > 0.0 && floors[j] / 2.0 - diag_h >= bound {
                        // Cannot lower the running minimum; the floor is a
                        // valid (if slack) certificate for this cell.
                        floors[j]
                    } else {
                        min_loop_at(&xqs[*i], *ssl, clamp).max(floors[j])
                    };
                    leaf_m = leaf_m.min(m);
                    leaf_bound = leaf_bound.min(m / 2.0 - diag_h);
                }
                // A scan can reveal a loop far shorter than the estimates
                // the cell was sized by (a conjugated translate outside any
                // collar); accepting it with a coarse cell would understate
                // the bound, so refine until the cell error is in proportion.
                if leaf_bound <= 0.0 || (leaf_bound < bound && diag_h > leaf_m / 4.0) {
                    if depth >= MAX_DEPTH {
                        return Err(SurfaceError::DensityInsufficient(diag_e / 4.0));
                    }
                    split(&mut stack);
                    continue;
                }
                sampled = true;
                bound = bound.min(leaf_bound);
            }
        }
        if !sampled {
            return Err(SurfaceError::DensityInsufficient(1e-3));
        }
        Ok(bound)
    }

    /// Dedup'd sorted translation lengths of the displacement ball; a marked
    /// isometry invariant used by the twist-invariance tests.
    pub fn length_spectrum(&self, radius: f64) -> Vec<f64> {
        let mut lens: Vec<f64> = self
            .ball_elements(radius)
            .iter()
            .map(|g| g.translation_length().0)
            .filter(|l| *l > 1e-9)
            .collect();
        lens.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lens.dedup_by(|a, b| (*a - *b).abs() < 1e-7);
        lens
    }

    /// Convex fundamental polygon about the basepoint; feasible for small
    /// surfaces and certified by comparing its area with the measured one.
    pub fn fundamental_domain(&self, ball_radius: f64) -> Result<DirichletDomain, SurfaceError> {
        let elements = self.ball_elements(ball_radius);
        let domain = dirichlet_domain(&self.basepoint, &elements)?;
        Ok(domain)
    }
}

/// Axis-aligned rectangle vs convex polygon intersection (separating axis
/// test; polygon vertices in cyclic order, either orientation).
/// Sutherland-Hodgman clip of a convex polygon by an axis-aligned box.
fn clip_rect_to_poly(lo: [f64; 2], hi: [f64; 2], poly: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out = poly.to_vec();
    // (axis, bound, keep-below?)
    let planes = [(0, lo[0], false), (0, hi[0], true), (1, lo[1], false), (1, hi[1], true)];
    for (axis, bound, below) in planes {
        let val = |k: &[f64; 2]| if below { bound - k[axis] } else { k[axis] - bound };
        let prev = std::mem::take(&mut out);
        let n = prev.len();
        for i in 0..n {
            let j = (i + 1) % n;
            let (vi, vj) = (val(&prev[i]), val(&prev[j]));
            if vi >= 0.0 {
                out.push(prev[i]);
            }
            if (vi >= 0.0) != (vj >= 0.0) {
                let t = vi / (vi - vj);
                out.push([
                    prev[i][0] + t * (prev[j][0] - prev[i][0]),
                    prev[i][1] + t * (prev[j][1] - prev[i][1]),
                ]);
            }
        }
        if out.is_empty() {
            return out;
        }
    }
    out
}

fn rect_intersects_convex(lo: [f64; 2], hi: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let m = poly.len();
    // Box axes.
    for a in 0..2 {
        let (pmin, pmax) = poly
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(x, y), v| (x.min(v[a]), y.max(v[a])));
        if pmax < lo[a] || pmin > hi[a] {
            return false;
        }
    }
    // Polygon edge normals.
    let rect = [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
    for i in 0..m {
        let (a, b) = (poly[i], poly[(i + 1) % m]);
        let n = [-(b[1] - a[1]), b[0] - a[0]];
        let project = |pts: &[[f64; 2]]| {
            pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(x, y), v| {
                let d = n[0] * v[0] + n[1] * v[1];
                (x.min(d), y.max(d))
            })
        };
        let (p0, p1) = project(poly);
        let (r0, r1) = project(&rect);
        if p1 < r0 || r1 < p0 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn canonical_surface(g: usize, n: usize, l: f64, tau: f64) -> Surface {
        let graph = PantsGraph::canonical(g, n).unwrap();
        let coords = FnCoordinates::uniform(&graph, l, tau);
        Surface::assemble(graph, coords).unwrap()
    }

    #[test]
    fn hexagon_geometry_checks() {
        for lengths in [[2.0, 1.5, 0.7], [2.0, 2.0, 2.0], [0.5, 3.0, 1.0]] {
            let piece = PantsPiece::build(lengths).unwrap();
            let hex = pants_hexagon(&piece);
            // Alternate sides are half the cuffs.
            for k in 0..3 {
                let (a, b) = (hex.corners[2 * k], hex.corners[2 * k + 1]);
                if let (HexCorner::Finite(a), HexCorner::Finite(b)) = (a, b) {
                    assert!((a.dist(&b) - lengths[k] / 2.0).abs() < 1e-9, "{lengths:?} cuff {k}");
                } else {
                    panic!("finite corners expected");
                }
            }
            // All six angles are right angles.
            let cs = hex.distinct_corners();
            for i in 0..6 {
                if let HexCorner::Finite(p) = cs[i] {
                    let ang = angle_between(
                        &p,
                        &cs[(i + 5) % 6].target(),
                        &cs[(i + 1) % 6].target(),
                    );
                    assert!((ang - PI / 2.0).abs() < 1e-9, "{lengths:?} corner {i}: {ang}");
                }
            }
            assert!((hex.area() - PI).abs() < 1e-9);
        }
        // Degenerate hexagons with cusps still measure pi.
        for lengths in [[2.0, 2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.1, 4.0, 0.0]] {
            let piece = PantsPiece::build(lengths).unwrap();
            assert!((pants_hexagon(&piece).area() - PI).abs() < 1e-9, "{lengths:?}");
        }
    }

    #[test]
    fn gauss_bonnet_matrix() {
        // Criterion: assembled area equals 2 pi (2g - 2 + n) within 1e-8,
        // measured from hexagon angle defects.
        for (g, n) in [(2, 0), (2, 1), (1, 1), (1, 2), (0, 3), (3, 2), (4, 0), (6, 4)] {
            let start = std::time::Instant::now();
            let s = canonical_surface(g, n, 2.0, 0.4);
            let expected = 2.0 * PI * (2 * g + n) as f64 - 4.0 * PI;
            assert!(
                (s.area - expected).abs() < 1e-8,
                "(g={g}, n={n}): {} vs {expected}",
                s.area
            );
            assert!(start.elapsed().as_secs_f64() < 1.0, "(g={g},n={n}) too slow");
        }
    }

    #[test]
    fn assembly_closure_detects_bad_gluing() {
        // Sanity: assemble succeeds on a surface with random-ish data.
        let graph = PantsGraph::canonical(2, 1).unwrap();
        let coords = FnCoordinates {
            lengths: vec![0.9, 1.7, 1.2, 0.6],
            twists: vec![0.3, -0.8, 1.1, 0.2],
        };
        let s = Surface::assemble(graph, coords).unwrap();
        assert_eq!(s.g, 2);
        assert_eq!(s.n, 1);
    }

    #[test]
    fn dirichlet_domain_area_small_surface() {
        // One-holed... thrice-punctured sphere as a full surface: the (0,3)
        // canonical graph has a single pants, area 2 pi, and its Dirichlet
        // domain closes with a small ball.
        let s = canonical_surface(0, 3, 2.0, 0.0);
        let dom = s.fundamental_domain(8.0).unwrap();
        assert!((dom.area - s.area).abs() < 1e-8, "domain {} vs {}", dom.area, s.area);
    }

    #[test]
    fn full_twist_invariance_spectrum() {
        let graph = PantsGraph::canonical(2, 0).unwrap();
        let mut coords = FnCoordinates::uniform(&graph, 2.0, 0.4);
        let s1 = Surface::assemble(graph.clone(), coords.clone()).unwrap();
        coords.twists[0] += coords.lengths[0];
        let s2 = Surface::assemble(graph, coords).unwrap();
        let (a, b) = (s1.length_spectrum(7.0), s2.length_spectrum(7.0));
        assert!(!a.is_empty());
        assert_eq!(a.len(), b.len(), "{a:?}\n{b:?}");
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn distance_basics() {
        let s = canonical_surface(2, 0, 2.0, 0.0);
        let p = s.basepoint;
        assert_eq!(s.distance(&p, &p, 5.0), SurfaceDistance::Within(0.0));
        // Nearby points: the plane distance wins below the injectivity radius.
        let q = HPoint { x: p.x + 0.01, y: p.y };
        let d = s.distance(&p, &q, 5.0);
        assert!(d.is_within());
        assert!((d.value() - p.dist(&q)).abs() < 1e-12);
        // Symmetry and triangle inequality on fixed probes.
        let r = HPoint { x: p.x - 0.2, y: p.y * 1.3 };
        let dpq = s.distance(&p, &q, 8.0).value();
        let dqp = s.distance(&q, &p, 8.0).value();
        assert!((dpq - dqp).abs() < 1e-9);
        let dpr = s.distance(&p, &r, 8.0).value();
        let dqr = s.distance(&q, &r, 8.0).value();
        assert!(dpr <= dpq + dqr + 1e-8);
        // A translate of p is at distance zero.
        let g = s.generators[0];
        let d0 = s.distance(&p, &g.apply(&p), 8.0);
        assert!(d0.is_within() && d0.value() < 1e-9);
    }

    #[test]
    fn cusp_regions_and_horocycles() {
        let s = canonical_surface(0, 3, 2.0, 0.0);
        let region = s.cusp_neighborhood(0, 1.0).unwrap();
        // The frame normalizes the holonomy to a unit translation.
        let w = region.frame.compose(&region.holonomy).compose(&region.frame.inverse());
        assert!((w.b / w.a).abs() - 1.0 < 1e-9 && (w.a.abs() - 1.0).abs() < 1e-9);
        // Horocycle distances: ln(eps / eps').
        assert!((horocycle_distance(1.0, 0.25) - 4.0_f64.ln()).abs() < 1e-12);
        // All three regions at the embedding bound are pairwise disjoint.
        let regions: Vec<CuspRegion> =
            (0..3).map(|c| s.cusp_neighborhood(c, 2.0).unwrap()).collect();
        assert!(s.cusp_regions_disjoint(&regions, 6.0));
        assert!(s.cusp_neighborhood(0, 2.5).is_err());
        assert!(s.cusp_neighborhood(3, 1.0).is_err());
    }

    #[test]
    fn injectivity_radius_bounds() {
        // Closed surface, all cuffs 2: the cuff loop caps eta at 1.
        let s = canonical_surface(2, 0, 2.0, 0.0);
        let eta = s.injectivity_radius_lower_bound(&[]).unwrap();
        assert!(eta > 0.0 && eta <= 1.0, "eta = {eta}");
        // A very short cuff forces a small bound.
        let graph = PantsGraph::canonical(2, 0).unwrap();
        let mut coords = FnCoordinates::uniform(&graph, 2.0, 0.0);
        coords.lengths[0] = 0.1;
        let thin = Surface::assemble(graph, coords).unwrap();
        let eta_thin = thin.injectivity_radius_lower_bound(&[]).unwrap();
        assert!(eta_thin > 0.0 && eta_thin <= 0.05, "eta = {eta_thin}");
        // Monotone (up to sampling slack) under shrinking exclusions.
        let c = canonical_surface(0, 3, 2.0, 0.0);
        let big: Vec<CuspRegion> = (0..3).map(|i| c.cusp_neighborhood(i, 1.0).unwrap()).collect();
        let small: Vec<CuspRegion> = (0..3).map(|i| c.cusp_neighborhood(i, 0.5).unwrap()).collect();
        let eta_big = c.injectivity_radius_lower_bound(&big).unwrap();
        let eta_small = c.injectivity_radius_lower_bound(&small).unwrap();
        assert!(eta_small <= eta_big + 0.05, "{eta_small} vs {eta_big}");
    }

    #[test]
    fn surface_spec_roundtrip() {
        let graph = PantsGraph::canonical(2, 1).unwrap();
        let coords = FnCoordinates {
            lengths: vec![0.9, 1.7, 1.2, 0.6],
            twists: vec![0.3, -0.8, 1.1, 0.2],
        };
        let spec = SurfaceSpec::from_parts(&graph, &coords);
        let json = serde_json::to_string(&spec).unwrap();
        let back: SurfaceSpec = serde_json::from_str(&json).unwrap();
        let (g2, c2) = back.to_parts().unwrap();
        assert_eq!(g2.edges, graph.edges);
        assert_eq!(c2.lengths, coords.lengths);
        assert_eq!(back.genus, 2);
        assert_eq!(back.cusps, 1);
    }
}
