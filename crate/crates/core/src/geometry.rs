//! Model domains near a boundary point at the origin, and their
//! rasterization onto uniform grids with cut-cell arm lengths.
//!
//! Coordinates are `x = (x₁, x₂)` with the boundary point of interest at the
//! origin and inner normal `e₂`. Every domain is intersected with the open
//! ball `B_R`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dini::Modulus;
use crate::error::{Error, Result};
use crate::stencil::StencilSet;

pub type Point = [f64; 2];

/// Which side of the boundary graph `x₂ = ±|x₁| ω(|x₁|)` is kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSign {
    /// `x₂ > −|x₁| ω(|x₁|)`: the domain bulges below the tangent line.
    ExteriorMinus,
    /// `x₂ > |x₁| ω(|x₁|)`: the domain is pinched above the tangent line.
    InteriorPlus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    HalfBall {
        radius: f64,
    },
    Graph {
        sign: GraphSign,
        omega: Modulus,
        radius: f64,
    },
    /// `B_R⁺ ∩ {|x₁| < 1/4 or x₂ > a}`: a half ball whose floor is raised to
    /// height `a` outside a central slot.
    Notch {
        a: f64,
        radius: f64,
    },
    /// `x₂ > k |x₁|`.
    Wedge {
        slope: f64,
        radius: f64,
    },
}

/// Half width of the central slot of the notch domain.
pub const NOTCH_HALF_WIDTH: f64 = 0.25;

impl DomainSpec {
    pub fn half_ball(radius: f64) -> Self {
        DomainSpec::HalfBall { radius }
    }

    pub fn graph(sign: GraphSign, omega: Modulus, radius: f64) -> Self {
        DomainSpec::Graph {
            sign,
            omega,
            radius,
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            DomainSpec::HalfBall { radius }
            | DomainSpec::Graph { radius, .. }
            | DomainSpec::Notch { radius, .. }
            | DomainSpec::Wedge { radius, .. } => *radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.radius();
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidProblem(format!("domain radius {r} must be positive")));
        }
        match self {
            DomainSpec::Graph { omega, radius, .. } => {
                omega.validate()?;
                if *radius > omega.domain_radius * (1.0 + 1e-12) {
                    return Err(Error::InvalidProblem(format!(
                        "domain radius {radius} exceeds the modulus domain {}",
                        omega.domain_radius
                    )));
                }
            }
            DomainSpec::Notch { a, .. } => {
                if !(*a >= 0.0 && *a < 0.5) {
                    return Err(Error::InvalidProblem(format!("notch offset {a} must lie in [0, 1/2)")));
                }
            }
            DomainSpec::Wedge { slope, .. } => {
                if !(*slope >= 0.0 && slope.is_finite()) {
                    return Err(Error::InvalidProblem(format!("wedge slope {slope} must be >= 0")));
                }
            }
            DomainSpec::HalfBall { .. } => {}
        }
        Ok(())
    }

    /// Membership in the part of the domain that ignores the ball, i.e. the
    /// side of the wall.
    fn above_wall(&self, x: Point) -> bool {
        match self {
            DomainSpec::HalfBall { .. } => x[1] > 0.0,
            DomainSpec::Graph { sign, omega, .. } => {
                let s = x[0].abs();
                let lift = s * omega.value(s.min(omega.domain_radius));
                match sign {
                    GraphSign::ExteriorMinus => x[1] > -lift,
                    GraphSign::InteriorPlus => x[1] > lift,
                }
            }
            DomainSpec::Notch { a, .. } => x[1] > 0.0 && (x[0].abs() < NOTCH_HALF_WIDTH || x[1] > *a),
            DomainSpec::Wedge { slope, .. } => x[1] > slope * x[0].abs(),
        }
    }

    pub fn inside(&self, x: Point) -> bool {
        let r = self.radius();
        x[0] * x[0] + x[1] * x[1] < r * r && self.above_wall(x)
    }

    /// Boundary piece a point on `∂Ω` belongs to.
    pub fn piece_of(&self, p: Point) -> Piece {
        if p[0].hypot(p[1]) >= self.radius() * (1.0 - 1e-9) {
            Piece::Outer
        } else {
            Piece::Wall
        }
    }
}

/// Evaluates the membership predicate of `spec` at `x`.
pub fn inside(spec: &DomainSpec, x: Point) -> bool {
    spec.inside(x)
}

/// The boundary modulus `ω_Ω` a graph or wedge domain was built from.
pub fn modulus_of_domain(spec: &DomainSpec) -> Result<Modulus> {
    match spec {
        DomainSpec::Graph { omega, .. } => Ok(omega.clone()),
        DomainSpec::Wedge { slope, .. } => Ok(Modulus::constant(*slope)),
        DomainSpec::HalfBall { .. } => Err(Error::NotApplicable(
            "a half ball has a flat wall, not a modulus boundary".into(),
        )),
        DomainSpec::Notch { .. } => Err(Error::NotApplicable(
            "the notch domain is not a modulus graph".into(),
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Piece {
    /// The graph, flat floor or notch walls.
    Wall,
    /// `∂B_R ∩ Ω̄`.
    Outer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Interior,
    DirichletOuter,
    DirichletWall,
    Exterior,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Interior => "interior",
            Role::DirichletOuter => "dirichlet_outer",
            Role::DirichletWall => "dirichlet_wall",
            Role::Exterior => "exterior",
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, Role::DirichletOuter | Role::DirichletWall)
    }

    fn for_piece(p: Piece) -> Role {
        match p {
            Piece::Wall => Role::DirichletWall,
            Piece::Outer => Role::DirichletOuter,
        }
    }
}

/// Where the far end of an arm reads its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArmTarget {
    /// Full arm ending on grid node (global index).
    Node(u32),
    /// Cut arm ending on boundary hit (index into [`GridMask::hits`]).
    Hit(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arm {
    /// Arm length in physical units.
    pub t: f64,
    pub target: ArmTarget,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryHit {
    pub point: Point,
    pub piece: Piece,
}

/// Arms shorter than this fraction of `h` are snapped: their node becomes
/// Dirichlet.
pub const SNAP_FRACTION: f64 = 1e-3;
const BISECTION_STEPS: u32 = 60;

/// A domain rasterized on the grid `x = (i h, j h)`, `|i|, |j| <= n`.
#[derive(Clone, Debug)]
pub struct GridMask {
    spec: DomainSpec,
    h: f64,
    n: i64,
    stencil: StencilSet,
    roles: Vec<Role>,
    interior: Vec<u32>,
    slot: Vec<u32>,
    arms: Vec<Arm>,
    hits: Vec<BoundaryHit>,
}

const NO_SLOT: u32 = u32::MAX;

impl GridMask {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn half_width(&self) -> i64 {
        self.n
    }

    pub fn stencil(&self) -> &StencilSet {
        &self.stencil
    }

    pub fn side(&self) -> usize {
        (2 * self.n + 1) as usize
    }

    pub fn node_count(&self) -> usize {
        self.roles.len()
    }

    pub fn index(&self, i: i64, j: i64) -> Option<usize> {
        if i.abs() > self.n || j.abs() > self.n {
            return None;
        }
        Some(((i + self.n) + (j + self.n) * (2 * self.n + 1)) as usize)
    }

    pub fn origin_index(&self) -> usize {
        self.index(0, 0).expect("origin is on the grid")
    }

    pub fn coords(&self, idx: usize) -> (i64, i64) {
        let side = 2 * self.n + 1;
        let idx = idx as i64;
        (idx % side - self.n, idx / side - self.n)
    }

    pub fn point(&self, idx: usize) -> Point {
        let (i, j) = self.coords(idx);
        [i as f64 * self.h, j as f64 * self.h]
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn role(&self, idx: usize) -> Role {
        self.roles[idx]
    }

    /// Global indices of interior nodes, in grid order.
    pub fn interior(&self) -> &[u32] {
        &self.interior
    }

    /// Position of a global node in [`Self::interior`].
    pub fn slot(&self, idx: usize) -> Option<usize> {
        match self.slot[idx] {
            NO_SLOT => None,
            s => Some(s as usize),
        }
    }

    /// `[t⁺, t⁻]` arms of interior slot `k` in stencil direction `d`.
    pub fn arms(&self, k: usize, d: usize) -> [Arm; 2] {
        let base = (k * self.stencil.directions().len() + d) * 2;
        [self.arms[base], self.arms[base + 1]]
    }

    pub fn hits(&self) -> &[BoundaryHit] {
        &self.hits
    }

    /// Nominal arm length of direction `d`.
    pub fn nominal(&self, d: usize) -> f64 {
        self.stencil.directions()[d].length * self.h
    }

    /// Writes `(i, j, x1, x2, role)` for every grid node.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["i", "j", "x1", "x2", "role"])?;
        for idx in 0..self.node_count() {
            let (i, j) = self.coords(idx);
            let p = self.point(idx);
            w.write_record([
                i.to_string(),
                j.to_string(),
                p[0].to_string(),
                p[1].to_string(),
                self.roles[idx].as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Debug dump of every arm: `(i, j, p, q, side, t, target, hit_x1, hit_x2, piece)`.
    pub fn write_arms_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["i", "j", "p", "q", "side", "t", "target", "hit_x1", "hit_x2", "piece"])?;
        for (k, &g) in self.interior.iter().enumerate() {
            let (i, j) = self.coords(g as usize);
            for (d, dir) in self.stencil.directions().iter().enumerate() {
                for (side, arm) in self.arms(k, d).iter().enumerate() {
                    let (target, hx, hy, piece) = match arm.target {
                        ArmTarget::Node(_) => ("node", String::new(), String::new(), String::new()),
                        ArmTarget::Hit(hidx) => {
                            let hit = self.hits[hidx as usize];
                            let piece = match hit.piece {
                                Piece::Wall => "wall",
                                Piece::Outer => "outer",
                            };
                            ("hit", hit.point[0].to_string(), hit.point[1].to_string(), piece.to_string())
                        }
                    };
                    w.write_record([
                        i.to_string(),
                        j.to_string(),
                        dir.lattice.0.to_string(),
                        dir.lattice.1.to_string(),
                        if side == 0 { "+" } else { "-" }.to_string(),
                        arm.t.to_string(),
                        target.to_string(),
                        hx,
                        hy,
                        piece,
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Rasterizes `spec` with grid spacing `h`, computing cut-cell arms for every
/// stencil direction by bisection on the membership predicate.
pub fn rasterize(spec: &DomainSpec, h: f64, stencil: &StencilSet) -> Result<GridMask> {
    spec.validate()?;
    let radius = spec.radius();
    if !(h > 0.0 && h <= radius / 16.0) {
        return Err(Error::InvalidProblem(format!(
            "grid spacing {h} must satisfy 0 < h <= R/16 = {}",
            radius / 16.0
        )));
    }
    let n = (radius / h).ceil() as i64;
    let side = 2 * n + 1;
    let count = (side * side) as usize;
    let pt = |idx: usize| -> Point {
        let idx = idx as i64;
        [(idx % side - n) as f64 * h, (idx / side - n) as f64 * h]
    };
    let index = |i: i64, j: i64| -> Option<usize> {
        (i.abs() <= n && j.abs() <= n).then(|| ((i + n) + (j + n) * side) as usize)
    };

    let inside: Vec<bool> = (0..count).into_par_iter().map(|idx| spec.inside(pt(idx))).collect();

    let dirs = stencil.directions();
    let candidates: Vec<u32> = (0..count).filter(|&i| inside[i]).map(|i| i as u32).collect();

    // Per node: arms with provisional local hits; hit indices are fixed up
    // sequentially afterwards so the layout does not depend on scheduling.
    let per_node: Vec<(Vec<(f64, Option<usize>)>, Vec<BoundaryHit>)> = candidates
        .par_iter()
        .map(|&g| {
            let g = g as usize;
            let x = pt(g);
            let (i, j) = ((g as i64) % side - n, (g as i64) / side - n);
            let mut arms = Vec::with_capacity(dirs.len() * 2);
            let mut hits = Vec::new();
            for dir in dirs {
                let (p, q) = dir.lattice;
                for sgn in [1i64, -1] {
                    let (ei, ej) = (i + sgn * p as i64, j + sgn * q as i64);
                    let full = dir.length * h;
                    match index(ei, ej) {
                        Some(e) if inside[e] => arms.push((full, Some(e))),
                        _ => {
                            let step = [sgn as f64 * p as f64 * h, sgn as f64 * q as f64 * h];
                            let (mut lo, mut hi) = (0.0f64, 1.0f64);
                            for _ in 0..BISECTION_STEPS {
                                let mid = 0.5 * (lo + hi);
                                if spec.inside([x[0] + mid * step[0], x[1] + mid * step[1]]) {
                                    lo = mid;
                                } else {
                                    hi = mid;
                                }
                            }
                            let s = 0.5 * (lo + hi);
                            let point = [x[0] + s * step[0], x[1] + s * step[1]];
                            arms.push((s * full, None));
                            hits.push(BoundaryHit {
                                point,
                                piece: spec.piece_of(point),
                            });
                        }
                    }
                }
            }
            (arms, hits)
        })
        .collect();

    let mut roles = vec![Role::Exterior; count];
    for (&g, (arms, hits)) in candidates.iter().zip(&per_node) {
        let mut hit_iter = hits.iter();
        let mut snapped = None;
        for a in arms {
            if a.1.is_none() {
                let hit = hit_iter.next().expect("one hit per cut arm");
                if a.0 < SNAP_FRACTION * h && snapped.is_none() {
                    snapped = Some(hit.piece);
                }
            }
        }
        roles[g as usize] = match snapped {
            Some(piece) => Role::for_piece(piece),
            None => Role::Interior,
        };
    }

    // Grid nodes sitting on the boundary itself.
    let eps = 1e-9 * h;
    let probes: [Point; 8] = [
        [eps, 0.0],
        [-eps, 0.0],
        [0.0, eps],
        [0.0, -eps],
        [eps, eps],
        [-eps, eps],
        [eps, -eps],
        [-eps, -eps],
    ];
    for idx in 0..count {
        if inside[idx] {
            continue;
        }
        let x = pt(idx);
        if probes.iter().any(|d| spec.inside([x[0] + d[0], x[1] + d[1]])) {
            roles[idx] = Role::for_piece(spec.piece_of(x));
        }
    }

    let mut interior = Vec::new();
    let mut slot = vec![NO_SLOT; count];
    let mut arms_flat = Vec::new();
    let mut hits_flat = Vec::new();
    for (&g, (arms, hits)) in candidates.iter().zip(per_node) {
        if roles[g as usize] != Role::Interior {
            continue;
        }
        slot[g as usize] = interior.len() as u32;
        interior.push(g);
        let mut hit_iter = hits.into_iter();
        for (t, target) in arms {
            let target = match target {
                Some(e) => ArmTarget::Node(e as u32),
                None => {
                    hits_flat.push(hit_iter.next().expect("one hit per cut arm"));
                    ArmTarget::Hit((hits_flat.len() - 1) as u32)
                }
            };
            arms_flat.push(Arm { t, target });
        }
    }

    let mask = GridMask {
        spec: spec.clone(),
        h,
        n,
        stencil: stencil.clone(),
        roles,
        interior,
        slot,
        arms: arms_flat,
        hits: hits_flat,
    };

    for k in 0..mask.interior.len() {
        for d in 0..dirs.len() {
            let [plus, minus] = mask.arms(k, d);
            if plus.t + minus.t < 0.25 * h {
                let (i, j) = mask.coords(mask.interior[k] as usize);
                return Err(Error::Resolution {
                    i,
                    j,
                    reason: format!(
                        "direction {:?} spans only {:e} < h/4 inside the domain",
                        dirs[d].lattice,
                        plus.t + minus.t
                    ),
                });
            }
        }
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dini::Modulus;

    #[test]
    fn inside_examples() {
        let g = DomainSpec::graph(GraphSign::InteriorPlus, Modulus::power(0.5, 1.0), 1.0);
        assert!(g.inside([0.25, 0.25]));
        let g = DomainSpec::graph(GraphSign::ExteriorMinus, Modulus::power(0.5, 1.0), 1.0);
        assert!(!g.inside([0.0, -1e-9]));
        let notch = DomainSpec::Notch { a: 0.3, radius: 1.0 };
        assert!(!notch.inside([0.3, 0.2]));
        assert!(notch.inside([0.1, 0.2]));
        assert!(notch.inside([0.3, 0.35]));
    }

    #[test]
    fn origin_on_boundary_for_all_kinds() {
        let kinds = [
            DomainSpec::half_ball(1.0),
            DomainSpec::graph(GraphSign::ExteriorMinus, Modulus::log_inverse(1.0, 1.0), 1.0),
            DomainSpec::graph(GraphSign::InteriorPlus, Modulus::power(0.5, 1.0), 1.0),
            DomainSpec::Notch { a: 0.2, radius: 1.0 },
            DomainSpec::Wedge { slope: 1.0, radius: 1.0 },
        ];
        for spec in kinds {
            assert!(!spec.inside([0.0, 0.0]));
            assert!(spec.inside([0.0, 1e-6]));
            let mask = rasterize(&spec, 1.0 / 32.0, &StencilSet::new(1).unwrap()).unwrap();
            assert_eq!(mask.role(mask.origin_index()), Role::DirichletWall);
        }
    }

    #[test]
    fn modulus_of_domain_cases() {
        let w = Modulus::power(0.5, 1.0);
        let g = DomainSpec::graph(GraphSign::InteriorPlus, w.clone(), 1.0);
        assert_eq!(modulus_of_domain(&g).unwrap(), w);
        let wedge = DomainSpec::Wedge { slope: 2.0, radius: 1.0 };
        assert_eq!(modulus_of_domain(&wedge).unwrap(), Modulus::constant(2.0));
        assert!(modulus_of_domain(&DomainSpec::half_ball(1.0)).is_err());
        assert!(modulus_of_domain(&DomainSpec::Notch { a: 0.1, radius: 1.0 }).is_err());
    }

    #[test]
    fn half_ball_axis_arms() {
        // h = 1/8 needs R >= 2 to meet the h <= R/16 resolution floor.
        let (h, r) = (1.0 / 8.0, 2.0);
        let mask = rasterize(&DomainSpec::half_ball(r), h, &StencilSet::new(1).unwrap()).unwrap();
        let d_vert = mask
            .stencil()
            .directions()
            .iter()
            .position(|d| d.lattice == (0, 1))
            .unwrap();
        for (k, &g) in mask.interior().iter().enumerate() {
            let (i, j) = mask.coords(g as usize);
            let [up, down] = mask.arms(k, d_vert);
            if j == 1 {
                assert!((down.t - h).abs() <= 1e-12 * h);
                if let ArmTarget::Hit(hidx) = down.target {
                    assert_eq!(mask.hits()[hidx as usize].piece, Piece::Wall);
                }
            }
            // Strictly inside the ball and above the first row: full arms.
            let p = mask.point(g as usize);
            if j > 1 && p[0].hypot(p[1] + h) < r {
                assert!(matches!(down.target, ArmTarget::Node(_)));
                assert!(matches!(up.target, ArmTarget::Node(_)));
            }
            let _ = i;
        }
        // The whole row j = 0 is wall.
        for i in -7..=7 {
            assert_eq!(mask.role(mask.index(i, 0).unwrap()), Role::DirichletWall);
        }
    }

    #[test]
    fn half_ball_arms_match_exact_distances() {
        // Oracle: distance along e from x to the line x₂ = 0 and to the
        // circle |x| = R, whichever comes first.
        let h = 1.0 / 16.0;
        let mask = rasterize(&DomainSpec::half_ball(1.0), h, &StencilSet::new(3).unwrap()).unwrap();
        for (k, &g) in mask.interior().iter().enumerate() {
            let x = mask.point(g as usize);
            for (d, dir) in mask.stencil().directions().iter().enumerate() {
                for (side, arm) in mask.arms(k, d).iter().enumerate() {
                    let s = if side == 0 { 1.0 } else { -1.0 };
                    let e = [s * dir.unit[0], s * dir.unit[1]];
                    let mut exact = mask.nominal(d);
                    if e[1] < 0.0 {
                        exact = exact.min(-x[1] / e[1]);
                    }
                    let b = x[0] * e[0] + x[1] * e[1];
                    let c = x[0] * x[0] + x[1] * x[1] - 1.0;
                    exact = exact.min(-b + (b * b - c).sqrt());
                    assert!(
                        (arm.t - exact).abs() <= 1e-10,
                        "node {:?} dir {:?} side {side}: {} vs {}",
                        mask.coords(g as usize),
                        dir.lattice,
                        arm.t,
                        exact
                    );
                }
            }
        }
    }

    #[test]
    fn constant_graph_downward_arm_matches_closed_form() {
        let h = 1.0 / 64.0;
        let spec = DomainSpec::graph(GraphSign::ExteriorMinus, Modulus::constant(1.0), 1.0);
        let mask = rasterize(&spec, h, &StencilSet::new(1).unwrap()).unwrap();
        let d_vert = mask
            .stencil()
            .directions()
            .iter()
            .position(|d| d.lattice == (0, 1))
            .unwrap();
        let mut checked = 0;
        for (k, &g) in mask.interior().iter().enumerate() {
            let x = mask.point(g as usize);
            if x.iter().any(|c| c.abs() > 0.5) {
                continue;
            }
            let [_, down] = mask.arms(k, d_vert);
            let expect = (x[0].abs() + x[1]).min(h);
            assert!((down.t - expect).abs() <= 1e-12 * h, "{x:?}: {} vs {expect}", down.t);
            checked += 1;
        }
        assert!(checked > 1000);
    }

    #[test]
    fn wedge_mask_is_symmetric() {
        let spec = DomainSpec::Wedge { slope: 1.0, radius: 1.0 };
        let mask = rasterize(&spec, 1.0 / 32.0, &StencilSet::new(2).unwrap()).unwrap();
        let n = mask.half_width();
        for j in -n..=n {
            for i in -n..=n {
                let a = mask.role(mask.index(i, j).unwrap());
                let b = mask.role(mask.index(-i, j).unwrap());
                assert_eq!(a, b, "({i}, {j})");
            }
        }
    }

    #[test]
    fn arms_positive_and_bounded() {
        let spec = DomainSpec::Notch { a: 0.3, radius: 1.0 };
        let mask = rasterize(&spec, 1.0 / 32.0, &StencilSet::new(3).unwrap()).unwrap();
        for k in 0..mask.interior().len() {
            for d in 0..mask.stencil().directions().len() {
                for arm in mask.arms(k, d) {
                    assert!(arm.t > 0.0 && arm.t <= mask.nominal(d) * (1.0 + 1e-15));
                }
            }
        }
    }

    #[test]
    fn containment_monotone_in_modulus() {
        let small = Modulus::power(0.5, 0.5);
        let big = Modulus::power(0.5, 1.0);
        let h = 1.0 / 64.0;
        for i in -64..=64 {
            for j in -64..=64 {
                let x = [i as f64 * h, j as f64 * h];
                let ip_big = DomainSpec::graph(GraphSign::InteriorPlus, big.clone(), 1.0).inside(x);
                let ip_small = DomainSpec::graph(GraphSign::InteriorPlus, small.clone(), 1.0).inside(x);
                assert!(!ip_big || ip_small);
                let em_big = DomainSpec::graph(GraphSign::ExteriorMinus, big.clone(), 1.0).inside(x);
                let em_small = DomainSpec::graph(GraphSign::ExteriorMinus, small.clone(), 1.0).inside(x);
                assert!(!em_small || em_big);
            }
        }
    }

    #[test]
    fn refinement_keeps_deep_interior_roles() {
        let spec = DomainSpec::graph(GraphSign::InteriorPlus, Modulus::log_inverse(1.0, 1.0), 1.0);
        let st = StencilSet::new(1).unwrap();
        let coarse = rasterize(&spec, 1.0 / 32.0, &st).unwrap();
        let fine = rasterize(&spec, 1.0 / 64.0, &st).unwrap();
        let h = coarse.h();
        for idx in 0..coarse.node_count() {
            let x = coarse.point(idx);
            if coarse.role(idx) != Role::Interior {
                continue;
            }
            let (i, j) = coarse.coords(idx);
            let deep = (0..64).all(|t| {
                let a = std::f64::consts::TAU * t as f64 / 64.0;
                spec.inside([x[0] + 2.0 * h * a.cos(), x[1] + 2.0 * h * a.sin()])
            });
            if deep {
                assert_eq!(fine.role(fine.index(2 * i, 2 * j).unwrap()), Role::Interior);
            }
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let st = StencilSet::new(1).unwrap();
        assert!(rasterize(&DomainSpec::half_ball(1.0), 0.1, &st).is_err());
    }

    #[test]
    fn csv_export_has_every_node() {
        let mask = rasterize(&DomainSpec::half_ball(1.0), 1.0 / 16.0, &StencilSet::new(1).unwrap()).unwrap();
        let mut buf = Vec::new();
        mask.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), mask.node_count() + 1);
        assert!(text.starts_with("i,j,x1,x2,role\n"));
        let mut arms = Vec::new();
        mask.write_arms_csv(&mut arms).unwrap();
        assert!(String::from_utf8(arms).unwrap().contains(",hit,"));
    }
}
