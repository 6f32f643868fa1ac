//! Closed curves on a surface: homotopy words, piecewise-geodesic
//! realizations, length and ambient diameter, exact simplicity and
//! disjointness tests, and combinatorial classification of the complement
//! of a curve system.

use crate::domain::{dirichlet_domain, DirichletDomain};
use crate::hyperbolic::{angle_between, GeodesicArc, GeodesicTarget, HPoint, Isometry};
use crate::mesh::{mesh_surface, MeshError, SurfaceMesh};
use crate::surface::{Surface, SurfaceError};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, thiserror::Error)]
pub enum CurveError {
    #[error("empty word")]
    EmptyWord,
    #[error("letter {0} out of range for {1} generators")]
    BadLetter(i32, usize),
    #[error("word has identity holonomy (contractible)")]
    Contractible,
    #[error("vertex chain does not close under holonomy (defect {0:.3e})")]
    NotClosed(f64),
    #[error("chain needs at least one segment")]
    TooShort,
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("surface: {0}")]
    Surface(#[from] SurfaceError),
    #[error("no fundamental domain closed up (last area defect {0:.3e})")]
    DomainIncomplete(f64),
    #[error("domain reduction did not terminate")]
    ReductionStuck,
    #[error("curves too close to mesh resolution: {0}")]
    RefinementNeeded(String),
}

/// A cyclically reduced word in the surface-group generators.  Letter `k > 0`
/// means `generators[k - 1]`, `k < 0` its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveWord(Vec<i32>);

impl CurveWord {
    pub fn new(letters: Vec<i32>) -> Result<CurveWord, CurveError> {
        if letters.is_empty() {
            return Err(CurveError::EmptyWord);
        }
        if letters.iter().any(|&l| l == 0) {
            return Err(CurveError::BadLetter(0, 0));
        }
        // Free reduction, then cyclic reduction at the seam.
        let mut w: Vec<i32> = Vec::with_capacity(letters.len());
        for l in letters {
            if w.last() == Some(&-l) {
                w.pop();
            } else {
                w.push(l);
            }
        }
        while w.len() >= 2 && *w.first().unwrap() == -*w.last().unwrap() {
            w.pop();
            w.remove(0);
        }
        if w.is_empty() {
            return Err(CurveError::Contractible);
        }
        Ok(CurveWord(w))
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    /// Cyclic rotation by `k` (same free homotopy class).
    pub fn rotate(&self, k: usize) -> CurveWord {
        let n = self.0.len();
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            w.push(self.0[(i + k) % n]);
        }
        CurveWord(w)
    }

    pub fn pow(&self, k: usize) -> CurveWord {
        CurveWord(self.0.repeat(k.max(1)))
    }

    /// A word is a proper power iff it has a cyclic period shorter than
    /// itself (the letters, not the geometry, decide this).
    pub fn is_primitive(&self) -> bool {
        let n = self.0.len();
        for p in 1..n {
            if n % p != 0 {
                continue;
            }
            if (0..n).all(|i| self.0[i] == self.0[i % p]) {
                return false;
            }
        }
        true
    }

    pub fn holonomy(&self, s: &Surface) -> Result<Isometry, CurveError> {
        let mut h = Isometry::identity();
        for &l in &self.0 {
            let idx = l.unsigned_abs() as usize - 1;
            if idx >= s.generators.len() {
                return Err(CurveError::BadLetter(l, s.generators.len()));
            }
            let g = if l > 0 { s.generators[idx] } else { s.generators[idx].inverse() };
            h = h.compose(&g);
        }
        Ok(h)
    }

    /// Length of the geodesic representative of the class: the translation
    /// length of the holonomy (conjugation and rotation invariant).
    pub fn geodesic_length(&self, s: &Surface) -> Result<f64, CurveError> {
        Ok(self.holonomy(s)?.translation_length().0)
    }
}

/// A closed piecewise-geodesic curve, stored as one period of a lift:
/// vertices `v_0 … v_m` with `v_m = holonomy · v_0`.
#[derive(Debug, Clone)]
pub struct PLCurve {
    pub vertices: Vec<HPoint>,
    pub holonomy: Isometry,
}

impl PLCurve {
    pub fn new(vertices: Vec<HPoint>, holonomy: Isometry) -> Result<PLCurve, CurveError> {
        if vertices.len() < 2 {
            return Err(CurveError::TooShort);
        }
        let defect = holonomy.apply(&vertices[0]).dist(vertices.last().unwrap());
        if defect > 1e-9 {
            return Err(CurveError::NotClosed(defect));
        }
        Ok(PLCurve { vertices, holonomy })
    }

    /// Number of segments in one period.
    pub fn segments(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(&w[1])).sum()
    }

    pub fn reversed(&self) -> PLCurve {
        let mut vs: Vec<HPoint> = self.vertices.iter().rev().cloned().collect();
        let hol = self.holonomy.inverse();
        // Re-anchor so the chain still starts at a genuine vertex lift.
        for v in &mut vs {
            *v = hol.apply(v);
        }
        PLCurve { vertices: vs, holonomy: hol }
    }

    /// Points along the curve at spacing at most `sp`, one period, segment
    /// endpoints always included (the closing vertex `v_m` is omitted since
    /// it repeats `v_0` on the surface).
    pub fn sample(&self, sp: f64) -> Vec<HPoint> {
        let mut out = Vec::new();
        for w in self.vertices.windows(2) {
            let d = w[0].dist(&w[1]);
            if d < 1e-12 {
                out.push(w[0]);
                continue;
            }
            let arc = GeodesicArc::between(&w[0], &w[1]).expect("distinct endpoints");
            let steps = (d / sp).ceil().max(1.0) as usize;
            for k in 0..steps {
                out.push(arc.eval(k as f64 / steps as f64));
            }
        }
        out
    }

    /// Insert enough vertices that every segment is at most `max_len` long.
    pub fn subdivide(&self, max_len: f64) -> PLCurve {
        let mut vs = Vec::new();
        for w in self.vertices.windows(2) {
            let d = w[0].dist(&w[1]);
            if d < 1e-12 {
                vs.push(w[0]);
                continue;
            }
            let arc = GeodesicArc::between(&w[0], &w[1]).expect("distinct endpoints");
            let steps = (d / max_len).ceil().max(1.0) as usize;
            for k in 0..steps {
                vs.push(arc.eval(k as f64 / steps as f64));
            }
        }
        vs.push(*self.vertices.last().unwrap());
        PLCurve { vertices: vs, holonomy: self.holonomy }
    }

    /// Largest deviation of an interior vertex angle from pi, the geodesity
    /// measure.  Zero-length segments are skipped.
    pub fn max_angle_defect(&self) -> f64 {
        let cleaned: Vec<HPoint> = {
            let mut out: Vec<HPoint> = Vec::new();
            for v in &self.vertices[..self.vertices.len() - 1] {
                if out.last().map_or(true, |p: &HPoint| p.dist(v) > 1e-12) {
                    out.push(*v);
                }
            }
            out
        };
        let m = cleaned.len();
        if m < 2 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for j in 0..m {
            let at = cleaned[j];
            let prev =
                if j == 0 { self.holonomy.inverse().apply(&cleaned[m - 1]) } else { cleaned[j - 1] };
            let next = if j + 1 == m { self.holonomy.apply(&cleaned[0]) } else { cleaned[j + 1] };
            if at.dist(&prev) < 1e-12 || at.dist(&next) < 1e-12 {
                continue;
            }
            let ang = angle_between(
                &at,
                &GeodesicTarget::Point(prev),
                &GeodesicTarget::Point(next),
            );
            worst = worst.max((std::f64::consts::PI - ang).abs());
        }
        worst
    }
}

/// Piecewise-geodesic loop through the basepoint tracing the word.
pub fn realize(s: &Surface, w: &CurveWord) -> Result<PLCurve, CurveError> {
    let hol = w.holonomy(s)?;
    if hol.is_identity(1e-9) {
        return Err(CurveError::Contractible);
    }
    let mut vs = vec![s.basepoint];
    let mut prefix = Isometry::identity();
    for &l in w.letters() {
        let idx = l.unsigned_abs() as usize - 1;
        let g = if l > 0 { s.generators[idx] } else { s.generators[idx].inverse() };
        prefix = prefix.compose(&g);
        vs.push(prefix.apply(&s.basepoint));
    }
    PLCurve::new(vs, hol).map(|c| c.subdivide(0.75))
}

/// The geodesic circle of a hyperbolic deck element, as a PLCurve running
/// along its axis with `segments` vertices per period.
pub fn axis_curve(g: &Isometry, segments: usize) -> Result<PLCurve, CurveError> {
    let (len, _) = g.translation_length();
    if len < 1e-9 {
        return Err(CurveError::Contractible);
    }
    let frame = g.axis_frame_of().ok_or(CurveError::Contractible)?;
    let m = segments.max(2);
    let vs: Vec<HPoint> = (0..=m)
        .map(|k| frame.apply(&HPoint { x: 0.0, y: (len * k as f64 / m as f64).exp() }))
        .collect();
    PLCurve::new(vs, *g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Passes,
    Fails,
    Indeterminate,
}

impl Verdict {
    /// Conservative resolution: an indeterminate tangency counts as failing.
    pub fn conservative(&self) -> bool {
        *self == Verdict::Passes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub genus: usize,
    /// Boundary circles coming from cutting curves.
    pub boundary: usize,
    pub cusps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionKind {
    Pants,
    PseudoPants,
    Invalid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplementReport {
    pub components: Vec<ComponentReport>,
    pub kind: DecompositionKind,
    /// Euler characteristic audit: sum over components, expected value.
    pub chi_sum: i64,
    pub chi_expected: i64,
}

/// A curve system together with its complement classification.
#[derive(Debug, Clone)]
pub struct PantsDecomposition {
    pub curves: Vec<PLCurve>,
    pub report: ComplementReport,
}

const SEG_TANGENCY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SegHit {
    Miss,
    Cross,
    /// Endpoint contact or a configuration within the tangency tolerance.
    Touch,
}

/// Exact segment intersection in the Klein model (geodesics are chords).
fn seg_hit(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> SegHit {
    let cross = |o: [f64; 2], p: [f64; 2], q: [f64; 2]| {
        (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])
    };
    let d1 = cross(b[0], b[1], a[0]);
    let d2 = cross(b[0], b[1], a[1]);
    let d3 = cross(a[0], a[1], b[0]);
    let d4 = cross(a[0], a[1], b[1]);
    let t = SEG_TANGENCY;
    if d1.abs() < t && d2.abs() < t && d3.abs() < t && d4.abs() < t {
        // Collinear: an overlap of positive length is a genuine crossing
        // (coincident sub-segments), a point contact is a touch.
        let axis = if (a[1][0] - a[0][0]).abs() > (a[1][1] - a[0][1]).abs() { 0 } else { 1 };
        let (a0, a1) = (a[0][axis].min(a[1][axis]), a[0][axis].max(a[1][axis]));
        let (b0, b1) = (b[0][axis].min(b[1][axis]), b[0][axis].max(b[1][axis]));
        let overlap = a1.min(b1) - a0.max(b0);
        if overlap > 10.0 * t {
            return SegHit::Cross;
        }
        if overlap > -t {
            return SegHit::Touch;
        }
        return SegHit::Miss;
    }
    if (d1.abs() < t && on_segment(b, a[0], t))
        || (d2.abs() < t && on_segment(b, a[1], t))
        || (d3.abs() < t && on_segment(a, b[0], t))
        || (d4.abs() < t && on_segment(a, b[1], t))
    {
        return SegHit::Touch;
    }
    if (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) {
        return SegHit::Cross;
    }
    SegHit::Miss
}

fn on_segment(s: [[f64; 2]; 2], p: [f64; 2], tol: f64) -> bool {
    p[0] >= s[0][0].min(s[1][0]) - tol
        && p[0] <= s[0][0].max(s[1][0]) + tol
        && p[1] >= s[0][1].min(s[1][1]) - tol
        && p[1] <= s[0][1].max(s[1][1]) + tol
}

/// One period of a curve as corrected arcs: each arc carries its own deck
/// correction keeping both endpoints near the basepoint, so Klein
/// coordinates stay well conditioned even when the raw chain wanders.
struct ArcSet {
    /// Klein endpoints per arc.
    arcs: Vec<[[f64; 2]; 2]>,
    /// Chain vertex index of the arc start (end is start + 1 cyclically).
    start_idx: Vec<usize>,
    period: usize,
}

impl ArcSet {
    fn radius(&self) -> f64 {
        self.arcs
            .iter()
            .flatten()
            .map(|k| {
                let r2: f64 = (k[0] * k[0] + k[1] * k[1]).min(1.0 - 1e-15);
                r2.sqrt().atanh()
            })
            .fold(0.0, f64::max)
    }
}

/// Probe of a surface: a scratch mesh, a Dirichlet domain for point
/// reduction, and the short deck translates relating nearby fundamental
/// domain points.  Built once and reused for diameter and complement
/// queries.
pub struct SurfaceProbe<'a> {
    pub s: &'a Surface,
    pub mesh: SurfaceMesh,
    pub domain: DirichletDomain,
    /// Side pairings of the domain and their inverses.
    pairings: Vec<Isometry>,
    /// Deck translates that can relate two nearby reduced points: identity
    /// plus products of up to three side pairings, displacement-filtered.
    gamma: Vec<Isometry>,
    /// Domain-reduced lift per mesh vertex.
    vlift: Vec<HPoint>,
    /// Largest reduced-lift distance to the basepoint.
    rho: f64,
    /// Longest mesh edge.
    emax: f64,
}

impl<'a> SurfaceProbe<'a> {
    pub fn new(s: &'a Surface, h: f64) -> Result<SurfaceProbe<'a>, CurveError> {
        let mesh = mesh_surface(s, h)?;
        // Fundamental domain, growing the ball until its area certificate
        // matches the assembled surface.
        let mut domain = None;
        let mut defect = f64::INFINITY;
        for r in [6.0, 8.0, 10.0, 12.0] {
            let elements = s.ball_elements(r);
            if let Ok(d) = dirichlet_domain(&s.basepoint, &elements) {
                defect = (d.area - s.area).abs();
                if defect < 1e-6 {
                    let pairing_ids: std::collections::BTreeSet<usize> =
                        d.sides.iter().map(|side| side.element).collect();
                    let mut pairings = Vec::new();
                    for i in pairing_ids {
                        pairings.push(elements[i]);
                        pairings.push(elements[i].inverse());
                    }
                    domain = Some((d, pairings));
                    break;
                }
            }
        }
        let (domain, pairings) = domain.ok_or(CurveError::DomainIncomplete(defect))?;

        let reduce1 = |p: &HPoint| reduce_point(&pairings, &s.basepoint, p);
        let vlift: Result<Vec<HPoint>, CurveError> =
            mesh.vertices.iter().map(|v| reduce1(&v.lift)).collect();
        let vlift = vlift?;
        let rho = vlift.iter().map(|v| v.dist(&s.basepoint)).fold(0.0, f64::max);
        let emax = mesh.edges.iter().map(|e| e.2).fold(0.0, f64::max);

        // Products of up to three side pairings, displacement-filtered and
        // deduplicated; enough to relate any two reduced points at small
        // mutual distance (domain vertices are generically trivalent).
        let cap = 2.0 * rho + 2.0;
        let mut gamma = vec![Isometry::identity()];
        let mut seen: HashMap<[i64; 4], ()> = HashMap::new();
        let mut key = |g: &Isometry| {
            let sign = if g.a.abs() > 0.5 { g.a.signum() } else { g.b.signum() + g.c.signum() };
            let sign = if sign >= 0.0 { 1.0 } else { -1.0 };
            [
                (sign * g.a * 1e7).round() as i64,
                (sign * g.b * 1e7).round() as i64,
                (sign * g.c * 1e7).round() as i64,
                (sign * g.d * 1e7).round() as i64,
            ]
        };
        seen.insert(key(&Isometry::identity()), ());
        let mut frontier = vec![Isometry::identity()];
        for _ in 0..3 {
            let mut next = Vec::new();
            for f in &frontier {
                for p in &pairings {
                    let g = f.compose(p);
                    if g.displacement(&s.basepoint) > cap {
                        continue;
                    }
                    if seen.insert(key(&g), ()).is_none() {
                        gamma.push(g);
                        next.push(g);
                    }
                }
            }
            frontier = next;
        }

        Ok(SurfaceProbe { s, mesh, domain, pairings, gamma, vlift, rho, emax })
    }

    /// Reduce a lift into the Dirichlet domain.
    pub fn reduce(&self, p: &HPoint) -> Result<HPoint, CurveError> {
        reduce_point(&self.pairings, &self.s.basepoint, p)
    }

    /// Nearby deck copies of a reduced point, for lift-distance matching.
    fn copies(&self, reduced: &HPoint, slack: f64) -> Vec<HPoint> {
        let cap = self.rho + slack;
        self.gamma
            .iter()
            .map(|g| g.apply(reduced))
            .filter(|q| q.dist(&self.s.basepoint) <= cap)
            .collect()
    }

    /// Mesh vertex nearest to a surface point (lift given), with the lift
    /// distance achieved.
    pub fn locate(&self, p: &HPoint) -> Result<(usize, f64), CurveError> {
        let red = self.reduce(p)?;
        let copies = self.copies(&red, 1.0);
        let mut best = (0usize, f64::INFINITY);
        for (v, lift) in self.vlift.iter().enumerate() {
            for c in &copies {
                let d = lift.dist(c);
                if d < best.1 {
                    best = (v, d);
                }
            }
        }
        Ok(best)
    }

    /// Ambient diameter of a curve: max pairwise mesh distance over samples
    /// at the mesh spacing.  The additive error is bounded by twice the
    /// sample spacing plus the mesh metric distortion, reported as `slack`.
    pub fn curve_diameter(&self, c: &PLCurve) -> Result<DiameterReport, CurveError> {
        let sp = self.mesh.h;
        let mut vids: Vec<usize> = Vec::new();
        for p in c.sample(sp) {
            let (v, _) = self.locate(&p)?;
            vids.push(v);
        }
        vids.sort_unstable();
        vids.dedup();
        let mut value: f64 = 0.0;
        for (i, &v) in vids.iter().enumerate() {
            let dist = self.mesh.distances_from(v);
            for &u in &vids[i + 1..] {
                value = value.max(dist[u]);
            }
        }
        Ok(DiameterReport { value, slack: 4.0 * self.mesh.h, certified: true })
    }

    /// Cut the mesh along the curves and classify the complement.
    pub fn classify_complement(
        &self,
        curves: &[PLCurve],
    ) -> Result<ComplementReport, CurveError> {
        let spacing = 0.5 * self.mesh.h;
        let delta = 0.6 * self.emax + 0.5 * spacing;

        // Mark mesh vertices within delta of a curve (lift matching against
        // nearby deck copies of the reduced samples).
        let mut mark: Vec<Option<usize>> = vec![None; self.mesh.vertices.len()];
        for (ci, c) in curves.iter().enumerate() {
            let mut copies = Vec::new();
            for p in c.sample(spacing) {
                let red = self.reduce(&p)?;
                copies.extend(self.copies(&red, delta + 0.2));
            }
            if copies.is_empty() {
                return Err(CurveError::RefinementNeeded(format!(
                    "curve {ci} has no lift near the mesh"
                )));
            }
            for (v, lift) in self.vlift.iter().enumerate() {
                if copies.iter().any(|q| lift.dist(q) <= delta) {
                    if let Some(prev) = mark[v] {
                        if prev != ci {
                            return Err(CurveError::RefinementNeeded(format!(
                                "curves {prev} and {ci} collide at mesh scale"
                            )));
                        }
                    }
                    mark[v] = Some(ci);
                }
            }
        }
        for circle in &self.mesh.cusp_circles {
            if circle.iter().any(|&v| mark[v].is_some()) {
                return Err(CurveError::RefinementNeeded(
                    "curve runs into a cusp truncation circle".into(),
                ));
            }
        }

        // Faces: any marked vertex puts the face in that curve's band.
        let nf = self.mesh.triangles.len();
        let mut band: Vec<Option<usize>> = vec![None; nf];
        for (f, t) in self.mesh.triangles.iter().enumerate() {
            for &v in t {
                if let Some(ci) = mark[v] {
                    if let Some(prev) = band[f] {
                        if prev != ci {
                            return Err(CurveError::RefinementNeeded(format!(
                                "curves {prev} and {ci} collide at mesh scale"
                            )));
                        }
                    }
                    band[f] = Some(ci);
                }
            }
        }

        // Face adjacency across shared edges.
        let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (f, t) in self.mesh.triangles.iter().enumerate() {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edge_faces.entry((a.min(b), a.max(b))).or_default().push(f);
            }
        }

        // Components of the free faces.
        let mut comp: Vec<Option<usize>> = vec![None; nf];
        let mut ncomp = 0usize;
        for f0 in 0..nf {
            if band[f0].is_some() || comp[f0].is_some() {
                continue;
            }
            let id = ncomp;
            ncomp += 1;
            let mut stack = vec![f0];
            comp[f0] = Some(id);
            while let Some(f) = stack.pop() {
                let t = self.mesh.triangles[f];
                for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                    for &g in &edge_faces[&(a.min(b), a.max(b))] {
                        if band[g].is_none() && comp[g].is_none() {
                            comp[g] = Some(id);
                            stack.push(g);
                        }
                    }
                }
            }
        }

        // Audit each band: it must be a nonempty annulus around its curve.
        for ci in 0..curves.len() {
            let faces: Vec<usize> = (0..nf).filter(|&f| band[f] == Some(ci)).collect();
            if faces.is_empty() {
                return Err(CurveError::RefinementNeeded(format!(
                    "curve {ci} missed the mesh entirely"
                )));
            }
            let (chi, cycles) = subcomplex_stats(&self.mesh, &faces, &edge_faces)?;
            if chi != 0 || cycles != 2 {
                return Err(CurveError::RefinementNeeded(format!(
                    "band of curve {ci} is not an annulus (chi {chi}, {cycles} boundary cycles)"
                )));
            }
        }

        // Classify each component.
        let mut components = Vec::new();
        let mut chi_sum = 0i64;
        for id in 0..ncomp {
            let faces: Vec<usize> = (0..nf).filter(|&f| comp[f] == Some(id)).collect();
            let (chi, cycles) = subcomplex_stats(&self.mesh, &faces, &edge_faces)?;
            chi_sum += chi;
            let mut vset: Vec<bool> = vec![false; self.mesh.vertices.len()];
            for &f in &faces {
                for &v in &self.mesh.triangles[f] {
                    vset[v] = true;
                }
            }
            let cusps = self
                .mesh
                .cusp_circles
                .iter()
                .filter(|circle| circle.iter().all(|&v| vset[v]))
                .count();
            if cycles < cusps {
                return Err(CurveError::RefinementNeeded(
                    "component boundary under-counts its cusp circles".into(),
                ));
            }
            let boundary = cycles - cusps;
            let two_minus = 2 - chi - cycles as i64;
            if two_minus < 0 || two_minus % 2 != 0 {
                return Err(CurveError::RefinementNeeded(format!(
                    "component {id} has inconsistent invariants (chi {chi}, {cycles} cycles)"
                )));
            }
            components.push(ComponentReport {
                genus: (two_minus / 2) as usize,
                boundary,
                cusps,
            });
        }

        let chi_expected = 2 - 2 * self.s.g as i64 - self.s.n as i64;
        if chi_sum != chi_expected {
            return Err(CurveError::RefinementNeeded(format!(
                "complement Euler characteristic {chi_sum}, expected {chi_expected}"
            )));
        }
        let kind = if components.iter().all(|c| c.genus == 0 && c.boundary == 3 && c.cusps == 0) {
            DecompositionKind::Pants
        } else if components.iter().all(|c| c.genus == 0 && c.boundary == 3) {
            DecompositionKind::PseudoPants
        } else {
            DecompositionKind::Invalid
        };
        Ok(ComplementReport { components, kind, chi_sum, chi_expected })
    }
}

/// Euler characteristic and boundary cycle count of a face subcomplex.
fn subcomplex_stats(
    mesh: &SurfaceMesh,
    faces: &[usize],
    edge_faces: &HashMap<(usize, usize), Vec<usize>>,
) -> Result<(i64, usize), CurveError> {
    let infaces: std::collections::HashSet<usize> = faces.iter().cloned().collect();
    let mut verts: std::collections::HashSet<usize> = Default::default();
    let mut edges: std::collections::HashSet<(usize, usize)> = Default::default();
    for &f in faces {
        let t = mesh.triangles[f];
        for &v in &t {
            verts.insert(v);
        }
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let chi = verts.len() as i64 - edges.len() as i64 + faces.len() as i64;
    // Boundary edges: edges with exactly one incident face inside.
    let mut bnd_adj: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut nbnd = 0usize;
    for &(a, b) in &edges {
        let inside = edge_faces[&(a, b)].iter().filter(|f| infaces.contains(f)).count();
        if inside == 1 {
            bnd_adj.entry(a).or_default().push(b);
            bnd_adj.entry(b).or_default().push(a);
            nbnd += 1;
        }
    }
    for (_, nb) in &bnd_adj {
        if nb.len() != 2 {
            return Err(CurveError::RefinementNeeded(
                "nonmanifold boundary after cutting".into(),
            ));
        }
    }
    // Count boundary cycles.
    let mut cycles = 0usize;
    let mut seen: std::collections::HashSet<usize> = Default::default();
    for (&start, _) in &bnd_adj {
        if seen.contains(&start) {
            continue;
        }
        cycles += 1;
        let mut prev = start;
        let mut cur = bnd_adj[&start][0];
        seen.insert(start);
        while cur != start {
            seen.insert(cur);
            let nb = &bnd_adj[&cur];
            let next = if nb[0] == prev { nb[1] } else { nb[0] };
            prev = cur;
            cur = next;
        }
    }
    let _ = nbnd;
    Ok((chi, cycles))
}

/// Greedy Dirichlet reduction: repeatedly move the point by the side
/// pairing that brings it closest to the basepoint.
pub(crate) fn reduce_point(
    pairings: &[Isometry],
    basepoint: &HPoint,
    p: &HPoint,
) -> Result<HPoint, CurveError> {
    let mut cur = *p;
    let mut d = cur.dist(basepoint);
    for _ in 0..100_000 {
        let mut best: Option<(f64, HPoint)> = None;
        for g in pairings {
            let q = g.apply(&cur);
            let dq = q.dist(basepoint);
            if dq < d - 1e-12 && best.as_ref().map_or(true, |(b, _)| dq < *b) {
                best = Some((dq, q));
            }
        }
        match best {
            Some((dq, q)) => {
                cur = q;
                d = dq;
            }
            None => return Ok(cur),
        }
    }
    Err(CurveError::ReductionStuck)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiameterReport {
    pub value: f64,
    /// Additive error bound of the measurement.
    pub slack: f64,
    /// False when a distance cutoff degraded the value to a lower bound.
    pub certified: bool,
}

/// Ambient diameter via a private scratch mesh at resolution `h / 2`
/// (error within the `2 h` budget).
pub fn curve_diameter(s: &Surface, c: &PLCurve, h: f64) -> Result<DiameterReport, CurveError> {
    let probe = SurfaceProbe::new(s, (h / 2.0).min(0.25))?;
    let mut rep = probe.curve_diameter(c)?;
    rep.slack = 2.0 * h;
    Ok(rep)
}

/// Complement classification via a private scratch mesh, refining on demand.
pub fn classify_complement(
    s: &Surface,
    curves: &[PLCurve],
) -> Result<ComplementReport, CurveError> {
    let mut h = 0.2;
    let mut last = None;
    for _ in 0..3 {
        let probe = SurfaceProbe::new(s, h)?;
        match probe.classify_complement(curves) {
            Ok(rep) => return Ok(rep),
            Err(e @ CurveError::RefinementNeeded(_)) => {
                last = Some(e);
                h /= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}

fn corrected_arcs(
    pairings: &[Isometry],
    basepoint: &HPoint,
    c: &PLCurve,
) -> Result<ArcSet, CurveError> {
    let m = c.vertices.len() - 1;
    let mut arcs = Vec::with_capacity(m);
    let mut start_idx = Vec::with_capacity(m);
    for j in 0..m {
        let (a, b) = (c.vertices[j], c.vertices[j + 1]);
        if a.dist(&b) < 1e-12 {
            continue;
        }
        // One correction per arc, chosen at the arc midpoint.
        let arc = GeodesicArc::between(&a, &b).expect("distinct");
        let mid = arc.eval(0.5);
        let red = reduce_point(pairings, basepoint, &mid)?;
        // Recover the correcting element by replaying the reduction on the
        // midpoint: cheaper to re-run accumulating the product.
        let g = correction_of(pairings, basepoint, &mid)?;
        debug_assert!(g.apply(&mid).dist(&red) < 1e-6);
        arcs.push([g.apply(&a).to_klein(), g.apply(&b).to_klein()]);
        start_idx.push(j);
    }
    if arcs.is_empty() {
        return Err(CurveError::TooShort);
    }
    Ok(ArcSet { arcs, start_idx, period: m })
}

pub(crate) fn correction_of(
    pairings: &[Isometry],
    basepoint: &HPoint,
    p: &HPoint,
) -> Result<Isometry, CurveError> {
    let mut cur = *p;
    let mut acc = Isometry::identity();
    let mut d = cur.dist(basepoint);
    for _ in 0..100_000 {
        let mut best: Option<(f64, HPoint, Isometry)> = None;
        for g in pairings {
            let q = g.apply(&cur);
            let dq = q.dist(basepoint);
            if dq < d - 1e-12 && best.as_ref().map_or(true, |(b, _, _)| dq < *b) {
                best = Some((dq, q, *g));
            }
        }
        match best {
            Some((dq, q, g)) => {
                cur = q;
                acc = g.compose(&acc);
                d = dq;
            }
            None => return Ok(acc),
        }
    }
    Err(CurveError::ReductionStuck)
}

/// Deck translates against which arc pairs must be tested: identity plus
/// every short product whose displacement allows the translated arc set to
/// reach the other one.
pub(crate) fn meeting_translates(probe_pairings: &[Isometry], basepoint: &HPoint, reach: f64) -> Vec<Isometry> {
    let mut out = vec![Isometry::identity()];
    let mut seen: HashMap<[i64; 4], ()> = HashMap::new();
    let key = |g: &Isometry| {
        let sign = if g.a.abs() > 0.5 { g.a.signum() } else { g.b.signum() + g.c.signum() };
        let sign = if sign >= 0.0 { 1.0 } else { -1.0 };
        [
            (sign * g.a * 1e7).round() as i64,
            (sign * g.b * 1e7).round() as i64,
            (sign * g.c * 1e7).round() as i64,
            (sign * g.d * 1e7).round() as i64,
        ]
    };
    seen.insert(key(&Isometry::identity()), ());
    let mut frontier = vec![Isometry::identity()];
    for _ in 0..4 {
        let mut next = Vec::new();
        for f in &frontier {
            for p in probe_pairings {
                let g = f.compose(p);
                if g.displacement(basepoint) > reach {
                    continue;
                }
                if seen.insert(key(&g), ()).is_none() {
                    out.push(g);
                    next.push(g);
                }
            }
        }
        frontier = next;
    }
    out
}

/// Shared setup for the exact intersection tests: the Dirichlet side
/// pairings of the surface.
pub(crate) fn side_pairings(s: &Surface) -> Result<Vec<Isometry>, CurveError> {
    let mut defect = f64::INFINITY;
    for r in [6.0, 8.0, 10.0, 12.0] {
        let elements = s.ball_elements(r);
        if let Ok(d) = dirichlet_domain(&s.basepoint, &elements) {
            defect = (d.area - s.area).abs();
            if defect < 1e-6 {
                let ids: std::collections::BTreeSet<usize> =
                    d.sides.iter().map(|side| side.element).collect();
                let mut pairings = Vec::new();
                for i in ids {
                    pairings.push(elements[i]);
                    pairings.push(elements[i].inverse());
                }
                return Ok(pairings);
            }
        }
    }
    Err(CurveError::DomainIncomplete(defect))
}

/// Exact simplicity test: segment pairs over all deck translates that can
/// meet the corrected arc set.  Near-tangencies within 1e-10 come back
/// `Indeterminate`.
pub fn is_simple(s: &Surface, c: &PLCurve) -> Result<Verdict, CurveError> {
    let pairings = side_pairings(s)?;
    let set = corrected_arcs(&pairings, &s.basepoint, c)?;
    let reach = 2.0 * set.radius() + 0.5;
    let translates = meeting_translates(&pairings, &s.basepoint, reach);
    let mut indeterminate = false;
    for t in &translates {
        let identity = t.is_identity(1e-12);
        // Translated copies of every arc, in Klein coordinates.
        let moved: Vec<[[f64; 2]; 2]> = set
            .arcs
            .iter()
            .map(|a| {
                let p = t.apply(&HPoint::from_klein(a[0]).unwrap()).to_klein();
                let q = t.apply(&HPoint::from_klein(a[1]).unwrap()).to_klein();
                [p, q]
            })
            .collect();
        for i in 0..set.arcs.len() {
            for j in 0..set.arcs.len() {
                if identity && i >= j {
                    continue;
                }
                match seg_hit(set.arcs[i], moved[j]) {
                    SegHit::Miss => {}
                    SegHit::Cross => return Ok(Verdict::Fails),
                    SegHit::Touch => {
                        // Consecutive arcs and same-germ copies may touch at
                        // their shared chain vertex; anything else is a
                        // tangency we refuse to adjudicate.
                        let si = set.start_idx[i];
                        let sj = set.start_idx[j];
                        let p = set.period;
                        let consecutive = (si + 1) % p == sj % p
                            || (sj + 1) % p == si % p
                            || si == sj;
                        if !consecutive {
                            indeterminate = true;
                        } else {
                            // Allowed endpoint contact; a collinear overlap
                            // of positive length would still be flagged by
                            // the neighboring pair tests.
                        }
                    }
                }
            }
        }
    }
    if indeterminate {
        Ok(Verdict::Indeterminate)
    } else {
        Ok(Verdict::Passes)
    }
}

/// Exact disjointness test for two curves on the same surface.
pub fn are_disjoint(s: &Surface, c1: &PLCurve, c2: &PLCurve) -> Result<Verdict, CurveError> {
    let pairings = side_pairings(s)?;
    let a = corrected_arcs(&pairings, &s.basepoint, c1)?;
    let b = corrected_arcs(&pairings, &s.basepoint, c2)?;
    let reach = a.radius() + b.radius() + 0.5;
    let translates = meeting_translates(&pairings, &s.basepoint, reach);
    let mut indeterminate = false;
    for t in &translates {
        let moved: Vec<[[f64; 2]; 2]> = b
            .arcs
            .iter()
            .map(|arc| {
                let p = t.apply(&HPoint::from_klein(arc[0]).unwrap()).to_klein();
                let q = t.apply(&HPoint::from_klein(arc[1]).unwrap()).to_klein();
                [p, q]
            })
            .collect();
        for ai in &a.arcs {
            for bj in &moved {
                match seg_hit(*ai, *bj) {
                    SegHit::Miss => {}
                    SegHit::Cross => return Ok(Verdict::Fails),
                    SegHit::Touch => indeterminate = true,
                }
            }
        }
    }
    if indeterminate {
        Ok(Verdict::Indeterminate)
    } else {
        Ok(Verdict::Passes)
    }
}

/// JSON export of a curve: word (when known), one period of the vertex
/// chain, length data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveExport {
    pub word: Option<Vec<i32>>,
    pub vertices: Vec<[f64; 2]>,
    pub length: f64,
    pub geodesic_length: f64,
    pub diameter: Option<DiameterReport>,
}

impl CurveExport {
    pub fn from_curve(c: &PLCurve, word: Option<&CurveWord>) -> CurveExport {
        CurveExport {
            word: word.map(|w| w.letters().to_vec()),
            vertices: c.vertices.iter().map(|v| [v.x, v.y]).collect(),
            length: c.length(),
            geodesic_length: c.holonomy.translation_length().0,
            diameter: None,
        }
    }
}

/// The cuff geodesic of graph edge `e` as a PLCurve on the axis of its
/// conjugated holonomy.
pub fn cuff_curve(s: &Surface, e: usize, segments: usize) -> Result<PLCurve, CurveError> {
    let (p, i) = s.graph.edges[e][0];
    let hol = s.dev[p].compose(&s.pieces[p].delta[i]).compose(&s.dev[p].inverse());
    axis_curve(&hol, segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pants::{FnCoordinates, PantsGraph};

    fn surface(g: usize, n: usize, l: f64, tau: f64) -> Surface {
        let graph = PantsGraph::canonical(g, n).unwrap();
        let coords = FnCoordinates::uniform(&graph, l, tau);
        Surface::assemble(graph, coords).unwrap()
    }

    #[test]
    fn words_reduce_and_detect_powers() {
        let w = CurveWord::new(vec![1, 2, -2, 3]).unwrap();
        assert_eq!(w.letters(), &[1, 3]);
        assert!(matches!(CurveWord::new(vec![1, -1]), Err(CurveError::Contractible)));
        // Cyclic reduction across the seam.
        let w = CurveWord::new(vec![2, 1, 3, -2]).unwrap();
        assert_eq!(w.letters(), &[1, 3]);
        assert!(CurveWord::new(vec![1, 2]).unwrap().is_primitive());
        assert!(!CurveWord::new(vec![1, 2, 1, 2]).unwrap().is_primitive());
    }

    #[test]
    fn realization_closes_and_respects_class() {
        let s = surface(2, 0, 2.0, 0.3);
        let w = CurveWord::new(vec![1]).unwrap();
        let c = realize(&s, &w).unwrap();
        // Closure under holonomy is a construction invariant.
        let defect = c.holonomy.apply(&c.vertices[0]).dist(c.vertices.last().unwrap());
        assert!(defect < 1e-9);
        // A single-generator loop is homotopic to a cuff: the geodesic
        // length equals the Fenchel-Nielsen length of that cuff.
        let gl = w.geodesic_length(&s).unwrap();
        assert!(
            s.coords.lengths.iter().any(|l| (l - gl).abs() < 1e-9),
            "generator class length {gl} not among the cuffs"
        );
        assert!(c.length() >= gl - 1e-9);
    }

    #[test]
    fn geodesic_length_is_conjugation_invariant() {
        let s = surface(2, 0, 1.7, 0.45);
        let w = CurveWord::new(vec![1, 3, -2, 4]).unwrap();
        let base = w.geodesic_length(&s).unwrap();
        for k in 1..4 {
            let rot = w.rotate(k).geodesic_length(&s).unwrap();
            assert!((rot - base).abs() < 1e-9, "rotation {k}: {rot} vs {base}");
        }
        // Squares double the translation length.
        let sq = w.pow(2).geodesic_length(&s).unwrap();
        assert!((sq - 2.0 * base).abs() < 1e-8, "{sq} vs 2 x {base}");
    }

    #[test]
    fn length_is_additive_and_reversal_invariant() {
        let s = surface(2, 0, 2.0, 0.3);
        let c = realize(&s, &CurveWord::new(vec![1, 2]).unwrap()).unwrap();
        let fine = c.subdivide(0.1);
        assert!((c.length() - fine.length()).abs() < 1e-9);
        assert!((c.length() - c.reversed().length()).abs() < 1e-9);
        // Cuff circle length matches its class length exactly.
        let cuff = cuff_curve(&s, 0, 40).unwrap();
        assert!((cuff.length() - 2.0).abs() < 1e-8);
        assert!(cuff.max_angle_defect() < 1e-7);
    }

    #[test]
    fn cuff_diameter_matches_half_length() {
        let s = surface(2, 0, 2.0, 0.3);
        let cuff = cuff_curve(&s, 0, 40).unwrap();
        let rep = curve_diameter(&s, &cuff, 0.2).unwrap();
        // Half the cuff length when the collar is embedded; mesh slack on
        // top of that.
        assert!(rep.value <= 1.0 + rep.slack, "diameter {} too large", rep.value);
        assert!(rep.value >= 1.0 - rep.slack, "diameter {} too small", rep.value);
        // A constant curve has diameter zero.
        let p = s.basepoint;
        let point = PLCurve { vertices: vec![p, p], holonomy: Isometry::identity() };
        let probe = SurfaceProbe::new(&s, 0.2).unwrap();
        assert_eq!(probe.curve_diameter(&point).unwrap().value, 0.0);
    }

    #[test]
    fn simplicity_and_disjointness() {
        let s = surface(2, 0, 2.0, 0.3);
        let c0 = cuff_curve(&s, 0, 24).unwrap();
        let c1 = cuff_curve(&s, 1, 24).unwrap();
        assert_eq!(is_simple(&s, &c0).unwrap(), Verdict::Passes);
        assert_eq!(are_disjoint(&s, &c0, &c1).unwrap(), Verdict::Passes);
        // A curve in a proper-power class cannot be embedded.
        let sq = realize(&s, &CurveWord::new(vec![1, 1]).unwrap()).unwrap();
        assert_eq!(is_simple(&s, &sq).unwrap(), Verdict::Fails);
        // A curve is never disjoint from itself.
        assert_eq!(are_disjoint(&s, &c0, &c0).unwrap(), Verdict::Fails);
    }

    #[test]
    fn complement_of_cuff_system_is_pants() {
        let s = surface(2, 0, 2.0, 0.3);
        let curves: Vec<PLCurve> =
            (0..3).map(|e| cuff_curve(&s, e, 24).unwrap()).collect();
        let rep = classify_complement(&s, &curves).unwrap();
        assert_eq!(rep.components.len(), 2);
        assert_eq!(rep.kind, DecompositionKind::Pants);
        for c in &rep.components {
            assert_eq!((c.genus, c.boundary, c.cusps), (0, 3, 0));
        }
        assert_eq!(rep.chi_sum, -2);
    }

    #[test]
    fn complement_of_single_cuff() {
        let s = surface(2, 0, 2.0, 0.3);
        // Edge 0 joins the two handles: separating, so two genus-1 pieces.
        let rep = classify_complement(&s, &[cuff_curve(&s, 0, 24).unwrap()]).unwrap();
        assert_eq!(rep.components.len(), 2);
        for c in &rep.components {
            assert_eq!(*c, ComponentReport { genus: 1, boundary: 1, cusps: 0 });
        }
        // Edge 1 is a handle cuff: nonseparating, one genus-1 piece with
        // two boundary circles.
        let rep = classify_complement(&s, &[cuff_curve(&s, 1, 24).unwrap()]).unwrap();
        assert_eq!(rep.components.len(), 1);
        assert_eq!(rep.components[0], ComponentReport { genus: 1, boundary: 2, cusps: 0 });
    }

    #[test]
    fn complement_with_cusps() {
        let s = surface(0, 3, 0.0, 0.0);
        let rep = classify_complement(&s, &[]).unwrap();
        assert_eq!(rep.components.len(), 1);
        assert_eq!(rep.components[0], ComponentReport { genus: 0, boundary: 0, cusps: 3 });
        assert_eq!(rep.kind, DecompositionKind::Invalid);
        // (1, 1): cutting along the interior cuff leaves one (0, 2, 1)
        // piece... the canonical graph for (1,1) has one edge; cutting its
        // cuff gives a sphere with two boundary circles and the cusp.
        let s = surface(1, 1, 1.5, 0.2);
        let curves = vec![cuff_curve(&s, 0, 24).unwrap()];
        let rep = classify_complement(&s, &curves).unwrap();
        assert_eq!(rep.components.len(), 1);
        assert_eq!(rep.components[0], ComponentReport { genus: 0, boundary: 2, cusps: 1 });
        assert_eq!(rep.kind, DecompositionKind::Invalid);
    }

    #[test]
    fn diameter_sampling_is_stable() {
        let s = surface(2, 0, 2.0, 0.3);
        let c = cuff_curve(&s, 1, 24).unwrap();
        let probe = SurfaceProbe::new(&s, 0.15).unwrap();
        let d1 = probe.curve_diameter(&c).unwrap();
        let d2 = probe.curve_diameter(&c.subdivide(0.05)).unwrap();
        assert!((d1.value - d2.value).abs() <= d1.slack);
    }
}
