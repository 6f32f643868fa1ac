//! Disc-by-disc curve shortening: cusp exclusion regions, a convex disc
//! cover of the thick part, arc replacement by minimizing chords, and
//! iteration until every curve is a closed geodesic.  Lengths never
//! increase, homotopy classes are untouched (only vertices move), and
//! simplicity and disjointness survive each pass because every replacement
//! happens inside an embedded convex disc.

use crate::curves::{
    correction_of, meeting_translates, reduce_point, side_pairings, CurveError, PLCurve,
};
use crate::hyperbolic::{GeodesicArc, HPoint, Isometry};
use crate::surface::{horocycle_distance, normalizer, CuspRegion, Surface, SurfaceError};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum ShorteningError {
    #[error("surface: {0}")]
    Surface(#[from] SurfaceError),
    #[error("curve: {0}")]
    Curve(#[from] CurveError),
    #[error("threshold {0} needs a horocycle shorter than {1:.3e}")]
    ThresholdTooLarge(f64, f64),
    #[error("no embeddable cusp neighborhoods found")]
    NoCuspNeighborhood,
    #[error("coverage audit failed: point at distance {0:.3e} from every disc")]
    CoverageGap(f64),
    #[error("a whole curve fits in one disc (contractible arc)")]
    ContractibleArc,
    #[error("injectivity bound {0:.3e} too small to build discs")]
    ThinSurface(f64),
}

/// Excluded neighborhood of one cusp: every closed curve that is
/// noncontractible rel cusps and meets the inner region has length at
/// least `threshold`.
#[derive(Debug, Clone)]
pub struct ExclusionRegion {
    pub region: CuspRegion,
    /// Boundary length of the embedded outer neighborhood the certificate
    /// is measured from.
    pub outer_eps: f64,
    pub threshold: f64,
}

/// Pick exclusion regions certifying the length threshold `L`: a curve
/// reaching the inner horocycle must first cross the collar between the
/// embedded outer neighborhood and the inner one, twice.
pub fn choose_exclusions(s: &Surface, l: f64) -> Result<Vec<ExclusionRegion>, ShorteningError> {
    if s.n == 0 {
        return Ok(Vec::new());
    }
    // Largest outer boundary length (<= 2) with pairwise embedded regions.
    let mut outer_eps = None;
    for eps in [2.0, 1.0, 0.5, 0.25] {
        let regions: Result<Vec<CuspRegion>, SurfaceError> =
            (0..s.n).map(|c| s.cusp_neighborhood(c, eps)).collect();
        if let Ok(regions) = regions {
            if s.cusp_regions_disjoint(&regions, 6.0) {
                outer_eps = Some(eps);
                break;
            }
        }
    }
    let outer_eps = outer_eps.ok_or(ShorteningError::NoCuspNeighborhood)?;
    // Depth so that entering and leaving costs at least l:
    // 2 * dist(outer horocycle, inner horocycle) >= l.
    let inner = outer_eps * (-l / 2.0).exp();
    if inner < 1e-12 {
        return Err(ShorteningError::ThresholdTooLarge(l, inner));
    }
    debug_assert!(2.0 * horocycle_distance(outer_eps, inner) >= l - 1e-9);
    (0..s.n)
        .map(|c| {
            Ok(ExclusionRegion {
                region: s.cusp_neighborhood(c, inner)?,
                outer_eps,
                threshold: l,
            })
        })
        .collect()
}

/// One disc of the cover, identified by its lattice key.
#[derive(Debug, Clone, Copy)]
pub struct Disc {
    /// Domain-reduced lift of the center.
    pub center: HPoint,
    pub radius: f64,
    pub key: (u32, u32),
}

/// Convex disc cover of the thick part: a polar lattice of centers about
/// the basepoint (ring spacing = angular spacing = `spacing`), each center
/// deterministically perturbed for general position, radius `radius`.
/// Centers are generated lazily from their lattice keys; the traversal
/// order is the lexicographic key order.
pub struct DiscCover {
    pub radius: f64,
    pub spacing: f64,
    /// Perturbation amplitude (general position).
    pub jitter: f64,
    /// Frame taking the basepoint to `i`.
    norm: Isometry,
    norm_inv: Isometry,
    rings: u32,
}

impl DiscCover {
    fn angular_count(&self, ring: u32) -> u32 {
        if ring == 0 {
            return 1;
        }
        let rho = ring as f64 * self.spacing;
        ((2.0 * std::f64::consts::PI * rho.sinh() / self.spacing).ceil() as u32).max(6)
    }

    /// Deterministic jitter in [-1, 1) from the lattice key.
    fn hash_unit(key: (u32, u32), salt: u64) -> f64 {
        let mut x = (key.0 as u64) << 32 | key.1 as u64;
        x ^= salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        x ^= x >> 30;
        x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x ^= x >> 27;
        x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^= x >> 31;
        (x as f64 / u64::MAX as f64) * 2.0 - 1.0
    }

    /// Center of the disc with the given lattice key.
    pub fn center(&self, key: (u32, u32)) -> HPoint {
        let rho = key.0 as f64 * self.spacing + self.jitter * Self::hash_unit(key, 1);
        let rho = rho.max(0.0);
        let count = self.angular_count(key.0).max(1) as f64;
        let dtheta = if key.0 == 0 { 0.0 } else { self.jitter / rho.sinh().max(self.spacing) };
        let theta = 2.0 * std::f64::consts::PI * key.1 as f64 / count
            + dtheta * Self::hash_unit(key, 2);
        // Polar coordinates about i in the Poincare disc.
        let r_eucl = (rho / 2.0).tanh();
        let (wx, wy) = (r_eucl * theta.cos(), r_eucl * theta.sin());
        // Disc -> upper half plane: z = i (1 + w) / (1 - w).
        let (den_re, den_im) = (1.0 - wx, -wy);
        let den = den_re * den_re + den_im * den_im;
        let (num_re, num_im) = (1.0 + wx, wy);
        let re = (num_re * den_re + num_im * den_im) / den;
        let im = (num_im * den_re - num_re * den_im) / den;
        self.norm_inv.apply(&HPoint { x: -im, y: re.max(1e-300) })
    }

    /// Keys of all lattice discs whose center lies within `reach` of the
    /// reduced point `p`.
    pub fn keys_near(&self, p: &HPoint, reach: f64) -> Vec<(u32, u32)> {
        let q = self.norm.apply(p);
        let d = HPoint::i().dist(&q);
        // Angle of q about i in the disc model.
        let (den_x, den_y) = (q.x, q.y + 1.0);
        let den = den_x * den_x + den_y * den_y;
        let wx = (q.x * den_x + (q.y - 1.0) * den_y) / den;
        let wy = ((q.y - 1.0) * den_x - q.x * den_y) / den;
        let phi = wy.atan2(wx).rem_euclid(2.0 * std::f64::consts::PI);
        let pad = reach + self.jitter + self.spacing;
        let lo = (((d - pad) / self.spacing).floor().max(0.0)) as u32;
        let hi = (((d + pad) / self.spacing).ceil() as u32).min(self.rings);
        let mut keys = Vec::new();
        for ring in lo..=hi {
            let count = self.angular_count(ring);
            if ring == 0 {
                if d <= pad {
                    keys.push((0, 0));
                }
                continue;
            }
            let rho = ring as f64 * self.spacing;
            // cosh(reach') = cosh rho cosh d - sinh rho sinh d cos dtheta.
            let cos_dt =
                ((rho.cosh() * d.cosh() - pad.cosh()) / (rho.sinh() * d.sinh().max(1e-300))).min(1.0);
            let window = if cos_dt <= -1.0 {
                std::f64::consts::PI
            } else {
                cos_dt.acos()
            };
            let frac = window / (2.0 * std::f64::consts::PI);
            let jc = (phi / (2.0 * std::f64::consts::PI) * count as f64).round() as i64;
            let half = (frac * count as f64).ceil() as i64 + 1;
            for j in (jc - half)..=(jc + half) {
                let j = j.rem_euclid(count as i64) as u32;
                keys.push((ring, j));
            }
        }
        keys.sort_unstable();
        keys.dedup();
        keys.retain(|&k| self.center(k).dist(p) <= reach);
        keys
    }

    pub fn disc(&self, key: (u32, u32)) -> Disc {
        Disc { center: self.center(key), radius: self.radius, key }
    }
}

/// Per-pass record of the shortening trace.
#[derive(Debug, Clone, Serialize)]
pub struct PassRecord {
    pub pass: usize,
    pub scale_radius: f64,
    pub lengths: Vec<f64>,
    pub max_displacement: f64,
    /// Cheap ambient-diameter bound per curve (half the length, capped by
    /// the best earlier bound: replacements never increase diameter).
    pub diameter_bounds: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ShorteningTrace {
    pub records: Vec<PassRecord>,
    pub converged: Vec<bool>,
}

impl ShorteningTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pass,scale_radius,curve,length,max_displacement,diameter_bound\n");
        for r in &self.records {
            for (i, len) in r.lengths.iter().enumerate() {
                out.push_str(&format!(
                    "{},{:.9},{},{:.9},{:.9},{:.9}\n",
                    r.pass, r.scale_radius, i, len, r.max_displacement, r.diameter_bounds[i]
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ShorteningOptions {
    pub tol_angle: f64,
    pub tol_length: f64,
    pub max_passes: usize,
}

impl Default for ShorteningOptions {
    fn default() -> Self {
        ShorteningOptions { tol_angle: 1e-6, tol_length: 1e-4, max_passes: 400 }
    }
}

/// Shortening context: Dirichlet side pairings for reduction, the short
/// deck translates for lift matching, and the exclusion regions.
pub struct Shortener<'a> {
    pub s: &'a Surface,
    pub exclusions: Vec<ExclusionRegion>,
    /// Injectivity radius lower bound outside the exclusions.
    pub eta: f64,
    pairings: Vec<Isometry>,
    gamma: Vec<Isometry>,
    /// Circumradius of the finite part of the Dirichlet domain.
    rho: f64,
    /// How far the disc lattice must extend from the basepoint.
    reach: f64,
}

/// Chain vertex with its domain reduction.
#[derive(Clone)]
struct ChainVert {
    pos: HPoint,
    red: HPoint,
    /// corr * pos = red.
    corr: Isometry,
    /// Disc keys containing this vertex, with the gamma index matching the
    /// center copy: center_in_chain = corr^-1 gamma[i] center.
    keys: Vec<((u32, u32), usize)>,
}

impl<'a> Shortener<'a> {
    pub fn new(s: &'a Surface, exclusions: Vec<ExclusionRegion>) -> Result<Self, ShorteningError> {
        let regions: Vec<CuspRegion> = exclusions.iter().map(|e| e.region.clone()).collect();
        let eta = s.injectivity_radius_lower_bound(&regions)?;
        if eta < 1e-4 {
            return Err(ShorteningError::ThinSurface(eta));
        }
        let pairings = side_pairings(s)?;
        // Circumradius of the finite part of the domain: reduced points in
        // the thick part stay this close to the basepoint.
        let mut rho: f64 = 0.0;
        for r in [6.0, 8.0, 10.0, 12.0] {
            if let Ok(d) = crate::domain::dirichlet_domain(&s.basepoint, &s.ball_elements(r)) {
                if (d.area - s.area).abs() < 1e-6 {
                    rho = d.vertices.iter().map(|v| v.dist(&s.basepoint)).fold(0.0, f64::max);
                    break;
                }
            }
        }
        if rho == 0.0 {
            return Err(ShorteningError::Curve(CurveError::DomainIncomplete(f64::INFINITY)));
        }
        // Curves stay out of the exclusion interiors, but may climb the
        // cusps down to the inner horocycles; the lattice must reach them.
        let cusp_depth = exclusions
            .iter()
            .map(|e| horocycle_distance(2.0, e.region.epsilon))
            .fold(0.0, f64::max);
        let reach = rho + cusp_depth + 1.0;
        // Translates relating nearby reduced points and disc centers: both
        // live within `reach` of the basepoint.
        let gamma = meeting_translates(&pairings, &s.basepoint, 2.0 * rho + 2.0);
        Ok(Shortener { s, exclusions, eta, pairings, gamma, rho, reach })
    }

    /// Disc cover at the given radius (net spacing = radius / 3).
    pub fn cover(&self, radius: f64) -> DiscCover {
        let norm = normalizer(&self.s.basepoint);
        DiscCover {
            radius,
            spacing: radius / 3.0,
            jitter: self.eta / 1000.0,
            norm,
            norm_inv: norm.inverse(),
            rings: (self.reach / (radius / 3.0)).ceil() as u32,
        }
    }

    /// The stated final-scale cover (radius eta / 100, net eta / 300).
    pub fn final_cover(&self) -> DiscCover {
        self.cover(self.eta / 100.0)
    }

    fn reduce_chain(&self, c: &PLCurve, cover: &DiscCover) -> Result<Vec<ChainVert>, CurveError> {
        let mut out = Vec::with_capacity(c.vertices.len());
        let mut seed = Isometry::identity();
        for v in &c.vertices {
            let seeded = seed.apply(v);
            let extra = correction_of(&self.pairings, &self.s.basepoint, &seeded)?;
            let corr = extra.compose(&seed);
            let red = corr.apply(v);
            seed = corr;
            out.push(ChainVert { pos: *v, red, corr, keys: self.vertex_keys(&red, cover) });
        }
        Ok(out)
    }

    /// Disc keys whose (possibly copied) center contains the reduced point.
    fn vertex_keys(&self, red: &HPoint, cover: &DiscCover) -> Vec<((u32, u32), usize)> {
        let mut keys = Vec::new();
        for (gi, g) in self.gamma.iter().enumerate() {
            // Pull the point toward each nearby copy of the domain: the
            // center lattice is built around the basepoint, so test the
            // translated point against the plain lattice.
            let moved = g.inverse().apply(red);
            if moved.dist(&self.s.basepoint) > self.reach {
                continue;
            }
            for key in cover.keys_near(&moved, cover.radius - 1e-12) {
                if self.exclusions.iter().any(|e| e.region.contains(&cover.center(key))) {
                    continue;
                }
                if !keys.iter().any(|(k, _)| *k == key) {
                    keys.push((key, gi));
                }
            }
        }
        keys
    }

    /// One pass: every disc in lattice order, every curve in list order,
    /// every maximal in-disc run in parameter order, replaced by the
    /// minimizing chord between its boundary crossings.
    pub fn pass(
        &self,
        curves: &[PLCurve],
        cover: &DiscCover,
    ) -> Result<(Vec<PLCurve>, f64), ShorteningError> {
        let max_seg = (cover.radius / 2.0).max(1e-4);
        let mut chains: Vec<Vec<ChainVert>> = Vec::with_capacity(curves.len());
        let mut hols = Vec::with_capacity(curves.len());
        for c in curves {
            let c = c.subdivide(max_seg);
            chains.push(self.reduce_chain(&c, cover)?);
            hols.push(c.holonomy);
        }
        // Candidate discs: union of vertex keys, in lattice order.
        let mut discs: BTreeMap<(u32, u32), ()> = BTreeMap::new();
        for chain in &chains {
            for v in chain {
                for (k, _) in &v.keys {
                    discs.insert(*k, ());
                }
            }
        }
        let mut max_disp: f64 = 0.0;
        for (&key, _) in &discs {
            for (ci, chain) in chains.iter_mut().enumerate() {
                let disp = self.replace_in_disc(chain, hols[ci], cover, key)?;
                max_disp = max_disp.max(disp);
            }
        }
        let out: Vec<PLCurve> = chains
            .iter()
            .zip(&hols)
            .map(|(chain, &holonomy)| PLCurve {
                vertices: chain.iter().map(|v| v.pos).collect(),
                holonomy,
            })
            .collect();
        Ok((out, max_disp))
    }

    /// Replace every maximal run of `chain` inside disc `key` by the chord
    /// between its boundary crossings.  Returns the largest vertex
    /// displacement.  The chain is cyclic: vertex 0 is rotated out of the
    /// disc first when needed.
    fn replace_in_disc(
        &self,
        chain: &mut Vec<ChainVert>,
        holonomy: Isometry,
        cover: &DiscCover,
        key: (u32, u32),
    ) -> Result<f64, ShorteningError> {
        let r = cover.radius;
        let inside = |v: &ChainVert| v.keys.iter().find(|(k, _)| *k == key).map(|(_, gi)| *gi);
        let m = chain.len() - 1; // chain[m] = holonomy(chain[0])
        if m < 2 {
            return Ok(0.0);
        }
        // Rotate so vertex 0 is outside the disc.
        if inside(&chain[0]).is_some() {
            let Some(k0) = (0..m).find(|&j| inside(&chain[j]).is_none()) else {
                return Err(ShorteningError::ContractibleArc);
            };
            let mut rotated: Vec<ChainVert> = Vec::with_capacity(chain.len());
            rotated.extend_from_slice(&chain[k0..m]);
            for v in &chain[0..=k0] {
                let pos = holonomy.apply(&v.pos);
                let corr = v.corr.compose(&holonomy.inverse());
                rotated.push(ChainVert { pos, red: v.red, corr, keys: v.keys.clone() });
            }
            *chain = rotated;
        }
        let mut max_disp: f64 = 0.0;
        let mut j = 1usize;
        while j < chain.len() - 1 {
            let Some(gi) = inside(&chain[j]) else {
                j += 1;
                continue;
            };
            // Maximal run [a, b] of in-disc vertices.
            let a = j;
            let mut b = j;
            while b + 1 < chain.len() - 1 && inside(&chain[b + 1]).is_some() {
                b += 1;
            }
            // Disc center in chain coordinates, consistent across the run.
            let cc = chain[a]
                .corr
                .inverse()
                .apply(&self.gamma[gi].apply(&cover.center(key)));
            debug_assert!(cc.dist(&chain[a].pos) <= r + 1e-9);
            let e1 = boundary_crossing(&chain[a - 1].pos, &chain[a].pos, &cc, r);
            let e2 = boundary_crossing(&chain[b + 1].pos, &chain[b].pos, &cc, r);
            // Lengths of the old portion and the replacing chord.
            let mut old_len = e1.dist(&chain[a].pos) + e2.dist(&chain[b].pos);
            for t in a..b {
                old_len += chain[t].pos.dist(&chain[t + 1].pos);
            }
            let chord = e1.dist(&e2);
            if chord <= old_len {
                // Displacement: how far the removed vertices move to the
                // chord (measured against its endpoints and midpoint).
                let midpoint = if chord > 1e-12 {
                    GeodesicArc::between(&e1, &e2).expect("distinct").eval(0.5)
                } else {
                    e1
                };
                for t in a..=b {
                    let d = chain[t]
                        .pos
                        .dist(&e1)
                        .min(chain[t].pos.dist(&e2))
                        .min(chain[t].pos.dist(&midpoint));
                    max_disp = max_disp.max(d);
                }
                // Splice: new vertices e1, chord interior, e2.
                let mut insert = vec![e1];
                if chord > 1e-12 {
                    let arc = GeodesicArc::between(&e1, &e2).expect("distinct");
                    let steps = (chord / (r / 2.0)).ceil().max(1.0) as usize;
                    for k in 1..steps {
                        insert.push(arc.eval(k as f64 / steps as f64));
                    }
                }
                insert.push(e2);
                let seed = chain[a].corr;
                let inserted: Result<Vec<ChainVert>, CurveError> = insert
                    .iter()
                    .map(|p| {
                        let seeded = seed.apply(p);
                        let extra = correction_of(&self.pairings, &self.s.basepoint, &seeded)?;
                        let corr = extra.compose(&seed);
                        let red = corr.apply(p);
                        Ok(ChainVert { pos: *p, red, corr, keys: self.vertex_keys(&red, cover) })
                    })
                    .collect();
                let inserted = inserted.map_err(ShorteningError::Curve)?;
                let next = b + 1;
                chain.splice(a..next, inserted);
                j = a + 2;
            } else {
                j = b + 1;
            }
        }
        Ok(max_disp)
    }

    /// Full multi-scale run: coarse covers do the work, the stated
    /// eta/100 cover certifies the limit.
    pub fn run(
        &self,
        curves: &[PLCurve],
        opts: &ShorteningOptions,
    ) -> Result<(Vec<PLCurve>, ShorteningTrace), ShorteningError> {
        let mut cur: Vec<PLCurve> = curves.to_vec();
        let mut trace = ShorteningTrace::default();
        let mut diam_bounds: Vec<f64> = cur.iter().map(|c| c.length() / 2.0).collect();
        let mut pass_no = 0usize;
        let targets: Vec<f64> =
            cur.iter().map(|c| c.holonomy.translation_length().0).collect();
        let scales = [self.eta / 4.0, self.eta / 20.0, self.eta / 100.0];
        for (si, &radius) in scales.iter().enumerate() {
            let cover = self.cover(radius);
            let final_scale = si + 1 == scales.len();
            loop {
                if pass_no >= opts.max_passes {
                    break;
                }
                let (next, disp) = self.pass(&cur, &cover)?;
                pass_no += 1;
                cur = next;
                let lengths: Vec<f64> = cur.iter().map(|c| c.length()).collect();
                for (i, l) in lengths.iter().enumerate() {
                    diam_bounds[i] = diam_bounds[i].min(l / 2.0);
                }
                trace.records.push(PassRecord {
                    pass: pass_no,
                    scale_radius: radius,
                    lengths: lengths.clone(),
                    max_displacement: disp,
                    diameter_bounds: diam_bounds.clone(),
                });
                let converged = cur.iter().zip(&targets).all(|(c, &t)| {
                    c.max_angle_defect() < opts.tol_angle
                        && (c.length() - t).abs() < opts.tol_length
                });
                if converged {
                    break;
                }
                if !final_scale && disp < 0.02 * radius {
                    break;
                }
            }
        }
        trace.converged = cur
            .iter()
            .zip(&targets)
            .map(|(c, &t)| {
                c.max_angle_defect() < opts.tol_angle && (c.length() - t).abs() < opts.tol_length
            })
            .collect();
        Ok((cur, trace))
    }

    /// Coverage audit: `n` pseudo-random thick-part points must all lie in
    /// some disc of the cover.
    pub fn audit_cover(&self, cover: &DiscCover, n: usize) -> Result<(), ShorteningError> {
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut unit = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state as f64 / u64::MAX as f64
        };
        let norm_inv = normalizer(&self.s.basepoint).inverse();
        let mut checked = 0usize;
        while checked < n {
            // Area-uniform polar sample about the basepoint.
            let rho_max = 3.0f64;
            let u = unit();
            let rho = ((rho_max.cosh() - 1.0) * u + 1.0).acosh();
            let theta = 2.0 * std::f64::consts::PI * unit();
            let r_eucl = (rho / 2.0).tanh();
            let (wx, wy) = (r_eucl * theta.cos(), r_eucl * theta.sin());
            let den = (1.0 - wx) * (1.0 - wx) + wy * wy;
            let re = (1.0 - wx * wx - wy * wy) / den;
            let im = (wy * (1.0 - wx) + (1.0 + wx) * wy) / den;
            let p = norm_inv.apply(&HPoint { x: -im, y: re.max(1e-12) });
            let red = reduce_point(&self.pairings, &self.s.basepoint, &p)
                .map_err(ShorteningError::Curve)?;
            if self.exclusions.iter().any(|e| e.region.contains(&red)) {
                continue;
            }
            checked += 1;
            let mut best = f64::INFINITY;
            for (gi, g) in self.gamma.iter().enumerate() {
                let moved = g.inverse().apply(&red);
                if moved.dist(&self.s.basepoint) > self.reach {
                    continue;
                }
                for key in cover.keys_near(&moved, cover.radius + cover.spacing) {
                    best = best.min(cover.center(key).dist(&moved));
                }
                let _ = gi;
            }
            if best > cover.radius {
                return Err(ShorteningError::CoverageGap(best));
            }
        }
        Ok(())
    }
}

/// Point at distance `r` from `center` on the segment from `outside`
/// (distance > r) to `inside` (distance <= r), by bisection.
fn boundary_crossing(outside: &HPoint, inside: &HPoint, center: &HPoint, r: f64) -> HPoint {
    if outside.dist(inside) < 1e-12 {
        return *inside;
    }
    let arc = GeodesicArc::between(outside, inside).expect("distinct");
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if center.dist(outside) <= r {
        // Both endpoints inside (can happen right after a rotation): the
        // crossing degenerates to the outer endpoint.
        return *outside;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if center.dist(&arc.eval(mid)) <= r {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    arc.eval(hi)
}

/// Single-disc arc replacement (the elementary move, exposed for direct
/// testing): all maximal sub-arcs of `c` inside `disc` are replaced by
/// their minimizing chords.
pub fn replace_arc(
    sh: &Shortener,
    c: &PLCurve,
    cover: &DiscCover,
    disc: &Disc,
) -> Result<PLCurve, ShorteningError> {
    let mut chain = sh.reduce_chain(&c.subdivide(cover.radius / 2.0), cover)?;
    sh.replace_in_disc(&mut chain, c.holonomy, cover, disc.key)?;
    Ok(PLCurve { vertices: chain.iter().map(|v| v.pos).collect(), holonomy: c.holonomy })
}

/// Stated-scale disc cover (radius eta/100, spacing eta/300), audited.
pub fn build_disc_cover(s: &Surface, exclusions: &[ExclusionRegion]) -> Result<DiscCover, ShorteningError> {
    let sh = Shortener::new(s, exclusions.to_vec())?;
    let cover = sh.final_cover();
    sh.audit_cover(&cover, 1000)?;
    Ok(cover)
}

/// One full pass over all discs meeting the curves, in the fixed
/// traversal order.
pub fn shorten_pass(
    s: &Surface,
    curves: &[PLCurve],
    exclusions: &[ExclusionRegion],
    cover_radius: f64,
) -> Result<Vec<PLCurve>, ShorteningError> {
    let sh = Shortener::new(s, exclusions.to_vec())?;
    let cover = sh.cover(cover_radius);
    Ok(sh.pass(curves, &cover)?.0)
}

/// Multi-scale shortening to closed geodesics.
pub fn shorten_to_geodesics(
    s: &Surface,
    curves: &[PLCurve],
    exclusions: &[ExclusionRegion],
    opts: &ShorteningOptions,
) -> Result<(Vec<PLCurve>, ShorteningTrace), ShorteningError> {
    let sh = Shortener::new(s, exclusions.to_vec())?;
    sh.run(curves, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{are_disjoint, cuff_curve, is_simple, realize, CurveWord, Verdict};
    use crate::pants::{FnCoordinates, PantsGraph};

    fn surface(g: usize, n: usize, l: f64, tau: f64) -> Surface {
        let graph = PantsGraph::canonical(g, n).unwrap();
        let coords = FnCoordinates::uniform(&graph, l, tau);
        Surface::assemble(graph, coords).unwrap()
    }

    #[test]
    fn exclusions_certify_thresholds() {
        let s = surface(2, 0, 2.0, 0.3);
        assert!(choose_exclusions(&s, 10.0).unwrap().is_empty());
        let s = surface(1, 1, 1.5, 0.2);
        let ex = choose_exclusions(&s, 10.0).unwrap();
        assert_eq!(ex.len(), 1);
        assert!(ex[0].region.epsilon <= 2.0);
        // Shrinking the inner horocycle raises the certified threshold.
        let deeper = choose_exclusions(&s, 20.0).unwrap();
        assert!(deeper[0].region.epsilon < ex[0].region.epsilon);
        // No short hyperbolic class enters the exclusion: every axis point
        // of a ball class stays outside (bounded word-length audit).
        let region = &ex[0].region;
        for g in s.ball_elements(8.0) {
            let (len, class) = g.translation_length();
            if class != crate::hyperbolic::IsometryClass::Hyperbolic || len >= 10.0 {
                continue;
            }
            if let Some(frame) = g.axis_frame_of() {
                for k in 0..32 {
                    let p = frame.apply(&HPoint { x: 0.0, y: (len * k as f64 / 32.0).exp() });
                    assert!(!region.contains(&p), "short class (len {len}) enters exclusion");
                }
            }
        }
    }

    #[test]
    fn cover_is_lattice_complete() {
        let s = surface(2, 0, 2.0, 0.3);
        let sh = Shortener::new(&s, Vec::new()).unwrap();
        // Coarse scale for speed; the lattice logic is scale-free.
        let cover = sh.cover(sh.eta / 4.0);
        sh.audit_cover(&cover, 2000).unwrap();
        assert!(cover.radius <= sh.eta / 4.0 + 1e-12);
        // General position: no tangent boundary circles among neighbors.
        let p = s.basepoint;
        let keys = cover.keys_near(&p, 3.0 * cover.radius);
        for (i, &a) in keys.iter().enumerate() {
            for &b in &keys[i + 1..] {
                let d = cover.center(a).dist(&cover.center(b));
                assert!((d - 2.0 * cover.radius).abs() > 1e-9, "tangent discs {a:?} {b:?}");
                assert!(d > 1e-9, "coincident centers {a:?} {b:?}");
            }
        }
    }

    #[test]
    fn replacement_shortens_and_preserves_class() {
        let s = surface(2, 0, 2.0, 0.3);
        let sh = Shortener::new(&s, Vec::new()).unwrap();
        let cover = sh.cover(sh.eta / 4.0);
        let c = realize(&s, &CurveWord::new(vec![1, 3]).unwrap()).unwrap();
        let before = c.length();
        let trace_before = c.holonomy.abs_trace();
        let (after, _) = sh.pass(&[c], &cover).unwrap();
        assert!(after[0].length() <= before + 1e-12);
        assert!((after[0].holonomy.abs_trace() - trace_before).abs() < 1e-12);
        // A geodesic circle is a fixed point up to resampling noise.
        let cuff = cuff_curve(&s, 0, 64).unwrap();
        let len = cuff.length();
        let (fixed, _) = sh.pass(&[cuff], &cover).unwrap();
        assert!((fixed[0].length() - len).abs() < 1e-9);
    }

    #[test]
    fn shortening_converges_to_trace_length() {
        let s = surface(2, 0, 2.0, 0.3);
        let sh = Shortener::new(&s, Vec::new()).unwrap();
        let opts = ShorteningOptions::default();
        for word in [vec![1], vec![1, 3]] {
            let w = CurveWord::new(word).unwrap();
            let c = realize(&s, &w).unwrap();
            let target = w.geodesic_length(&s).unwrap();
            let (out, trace) = sh.run(&[c], &opts).unwrap();
            assert!(trace.converged[0], "did not converge: {}", trace.to_csv());
            assert!(
                (out[0].length() - target).abs() < 1e-4,
                "limit {} vs trace length {}",
                out[0].length(),
                target
            );
            // Monotone lengths, exactly.
            let lens: Vec<f64> = trace.records.iter().map(|r| r.lengths[0]).collect();
            for w in lens.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "length increased: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn passes_preserve_simplicity_and_disjointness() {
        let s = surface(2, 0, 2.0, 0.3);
        let sh = Shortener::new(&s, Vec::new()).unwrap();
        let cover = sh.cover(sh.eta / 4.0);
        // Wiggle two distinct cuffs before shortening.
        let mut curves = Vec::new();
        for e in [0usize, 1] {
            let c = cuff_curve(&s, e, 40).unwrap();
            let vs: Vec<HPoint> = c
                .vertices
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if i == 0 || i + 1 == c.vertices.len() {
                        *v
                    } else {
                        HPoint { x: v.x + 0.01 * v.y * ((i * 7 % 5) as f64 - 2.0), y: v.y }
                    }
                })
                .collect();
            curves.push(PLCurve::new(vs, c.holonomy).unwrap());
        }
        let mut cur = curves;
        for _ in 0..4 {
            let (next, _) = sh.pass(&cur, &cover).unwrap();
            for c in &next {
                assert_eq!(is_simple(&s, c).unwrap(), Verdict::Passes);
            }
            assert_eq!(are_disjoint(&s, &next[0], &next[1]).unwrap(), Verdict::Passes);
            cur = next;
        }
    }

    #[test]
    fn cusped_surface_shortening_respects_exclusions() {
        let s = surface(1, 1, 1.5, 0.2);
        let ex = choose_exclusions(&s, 10.0).unwrap();
        let sh = Shortener::new(&s, ex).unwrap();
        let c = realize(&s, &CurveWord::new(vec![1]).unwrap()).unwrap();
        let target = c.holonomy.translation_length().0;
        let (out, trace) = sh.run(&[c], &ShorteningOptions::default()).unwrap();
        assert!(trace.converged[0]);
        assert!((out[0].length() - target).abs() < 1e-4);
    }
}
