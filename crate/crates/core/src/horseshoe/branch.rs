//! Monotone branch tracking for compositions `g^n_ω` restricted to an arc.
//!
//! Every node of the tracker is a maximal piece on which the composition is
//! monotone (optionally restricted to the region where each step expands by
//! more than a floor). Pieces are stored relative to their parent's image so
//! preimages can be recovered one step at a time, which keeps full relative
//! precision even when the composite derivative is huge.

use serde::{Deserialize, Serialize};

use crate::circle::{Arc, CircleMap, NoiseStream};
use crate::error::{invalid, Error, Result};

/// Branches with lifted image shorter than this are pruned.
pub const EPS_BRANCH: f64 = 1e-13;

/// Geometric tolerance for endpoint matching.
pub const TAU_GEO: f64 = 1e-9;

pub const DEFAULT_BRANCH_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchConfig {
    /// When set, points where a step has `|df| ≤ floor` are discarded.
    pub floor: Option<f64>,
    pub eps_branch: f64,
    pub cap: usize,
}

impl Default for BranchConfig {
    fn default() -> Self {
        BranchConfig { floor: None, eps_branch: EPS_BRANCH, cap: DEFAULT_BRANCH_CAP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Node {
    pub parent: u32,
    /// Piece of the parent's image, shifted by `-shift`.
    pub piece: (f64, f64),
    pub shift: f64,
    /// `F(piece + ω)`, sorted.
    pub image: (f64, f64),
    /// Orientation of this step.
    pub increasing: bool,
    /// Orientation of the whole composition.
    pub orientation: bool,
    pub min_log_deriv: f64,
}

impl Node {
    pub fn image_length(&self) -> f64 {
        self.image.1 - self.image.0
    }
}

/// A maximal monotone branch of `g^n_ω|_I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneBranch {
    /// Lifted domain inside the lifted source arc.
    pub domain: (f64, f64),
    pub image_lift: (f64, f64),
    /// Sum over steps of the minimum of `log|df|` on the step's piece.
    pub min_log_deriv: f64,
    pub n: usize,
    pub increasing: bool,
}

impl MonotoneBranch {
    pub fn image_length(&self) -> f64 {
        self.image_lift.1 - self.image_lift.0
    }
}

/// One step of a pulled-back chain: the sub-interval of a node's piece that
/// maps onto the next step's interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub omega: f64,
    pub piece: (f64, f64),
    pub shift: f64,
    pub increasing: bool,
    pub pulled: (f64, f64),
}

/// Stepwise tracker of the monotone branches of `g^n_ω|_I`.
#[derive(Debug, Clone)]
pub struct BranchTracker<'a> {
    map: &'a CircleMap,
    noise: NoiseStream,
    cfg: BranchConfig,
    whole: bool,
    arcs: Vec<(f64, f64)>,
    levels: Vec<Vec<Node>>,
    omegas: Vec<f64>,
    pruned: usize,
}

impl<'a> BranchTracker<'a> {
    /// Tracker rooted at the lifted interval `source`, driven by `noise`
    /// from its current offset.
    pub fn new(map: &'a CircleMap, noise: NoiseStream, source: (f64, f64), cfg: BranchConfig) -> Result<Self> {
        if !(source.1 >= source.0) || source.1 - source.0 > 1.0 {
            return invalid("source must be a lifted interval of length at most 1");
        }
        let (whole, arcs) = match cfg.floor {
            None => {
                let s = map.singular_set();
                if s.is_empty() {
                    (true, vec![(0.0, 1.0)])
                } else {
                    let n = s.len();
                    let arcs = (0..n).map(|i| (s[i], if i + 1 < n { s[i + 1] } else { s[0] + 1.0 })).collect();
                    (false, arcs)
                }
            }
            Some(theta) => {
                if !(theta > 0.0) {
                    return invalid("branch floor must be positive");
                }
                map.superlevel_arcs(theta)
            }
        };
        let root = Node {
            parent: u32::MAX,
            piece: source,
            shift: 0.0,
            image: source,
            increasing: true,
            orientation: true,
            min_log_deriv: 0.0,
        };
        Ok(BranchTracker { map, noise, cfg, whole, arcs, levels: vec![vec![root]], omegas: Vec::new(), pruned: 0 })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub(crate) fn current(&self) -> &[Node] {
        self.levels.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.current().len()
    }

    pub fn is_empty(&self) -> bool {
        self.current().is_empty()
    }

    pub fn pruned_count(&self) -> usize {
        self.pruned
    }

    pub fn source(&self) -> (f64, f64) {
        self.levels[0][0].image
    }

    pub fn max_image_length(&self) -> f64 {
        self.current().iter().map(Node::image_length).fold(0.0, f64::max)
    }

    /// Splits `[a, b] + ω` into monotone pieces (in `y = x + ω` coordinates).
    fn split(&self, a: f64, b: f64, w: f64, out: &mut Vec<(f64, f64)>) {
        out.clear();
        let (ya, yb) = (a + w, b + w);
        if self.whole {
            out.push((ya, yb));
            return;
        }
        for &(p, q) in &self.arcs {
            let k0 = (ya - q).ceil() as i64;
            let k1 = (yb - p).floor() as i64;
            for k in k0..=k1 {
                let lo = ya.max(p + k as f64);
                let hi = yb.min(q + k as f64);
                if hi > lo {
                    out.push((lo, hi));
                }
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
    }

    /// Advances every branch by one step.
    pub fn step(&mut self) -> Result<()> {
        let depth = self.depth();
        let w = self.noise.draw(depth);
        let deg = self.map.degree();
        let mut next = Vec::new();
        let mut pieces = Vec::new();
        let parents = self.levels.last().expect("root level");
        for (pi, parent) in parents.iter().enumerate() {
            self.split(parent.image.0, parent.image.1, w, &mut pieces);
            for &(ylo, yhi) in &pieces {
                let (xlo, xhi) = (ylo - w, yhi - w);
                let shift = xlo.floor();
                let f_lo = self.map.lift(ylo) - deg * shift;
                let f_hi = self.map.lift(yhi) - deg * shift;
                let image = if f_lo <= f_hi { (f_lo, f_hi) } else { (f_hi, f_lo) };
                if image.1 - image.0 < self.cfg.eps_branch {
                    self.pruned += 1;
                    continue;
                }
                let increasing = self.map.deriv(0.5 * (ylo + yhi)) > 0.0;
                let md = self.map.min_abs_deriv_on(ylo, yhi);
                let step_min = if md > 0.0 { md.ln() } else { f64::NEG_INFINITY };
                next.push(Node {
                    parent: pi as u32,
                    piece: (xlo - shift, xhi - shift),
                    shift,
                    image,
                    increasing,
                    orientation: parent.orientation == increasing,
                    min_log_deriv: parent.min_log_deriv + step_min,
                });
            }
            if next.len() > self.cfg.cap {
                return Err(Error::BranchExplosion { count: next.len(), cap: self.cfg.cap });
            }
        }
        self.omegas.push(w);
        self.levels.push(next);
        Ok(())
    }

    /// Keeps the `keep` branches with the longest images at the current
    /// depth.
    pub fn prune_to_longest(&mut self, keep: usize) {
        let cur = self.levels.last_mut().expect("root level");
        if cur.len() <= keep {
            return;
        }
        let mut idx: Vec<usize> = (0..cur.len()).collect();
        idx.sort_by(|&a, &b| cur[b].image_length().total_cmp(&cur[a].image_length()).then(a.cmp(&b)));
        idx.truncate(keep);
        idx.sort_unstable();
        let kept: Vec<Node> = idx.iter().map(|&i| cur[i]).collect();
        self.pruned += cur.len() - kept.len();
        *cur = kept;
    }

    /// Solves `F(u + ω) = t` on the node's piece.
    fn solve(&self, node: &Node, w: f64, t: f64) -> f64 {
        let (p0, p1) = node.piece;
        let (lo_end, hi_end) = if node.increasing { (p0, p1) } else { (p1, p0) };
        if t <= node.image.0 {
            return lo_end;
        }
        if t >= node.image.1 {
            return hi_end;
        }
        let deg_shift = self.map.degree() * node.shift;
        let g = |u: f64| self.map.lift(u + node.shift + w) - deg_shift - t;
        // g is monotone on the piece: keep a where g has the sign of g(lo_end)
        let (mut a, mut b) = (lo_end, hi_end);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if g(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        if (g(a)).abs() <= (g(b)).abs() {
            a
        } else {
            b
        }
    }

    /// Pulls the lifted interval `target` (inside the image of the branch
    /// `idx` at the current depth) back to the source, returning the domain
    /// and the chain of intermediate intervals from the source outward.
    pub fn pullback(&self, idx: usize, target: (f64, f64)) -> Result<((f64, f64), Vec<ChainStep>)> {
        let depth = self.depth();
        let mut node_idx = idx;
        let mut t = target;
        let mut chain = Vec::with_capacity(depth);
        for lvl in (1..=depth).rev() {
            let node = self.levels[lvl]
                .get(node_idx)
                .ok_or_else(|| Error::InvalidArgument(format!("no branch {node_idx} at depth {lvl}")))?;
            let w = self.omegas[lvl - 1];
            let u0 = self.solve(node, w, t.0);
            let u1 = self.solve(node, w, t.1);
            let pulled = if u0 <= u1 { (u0, u1) } else { (u1, u0) };
            chain.push(ChainStep {
                omega: w,
                piece: node.piece,
                shift: node.shift,
                increasing: node.increasing,
                pulled,
            });
            t = (pulled.0 + node.shift, pulled.1 + node.shift);
            node_idx = node.parent as usize;
        }
        chain.reverse();
        Ok((t, chain))
    }

    /// Materialises the branches at the current depth.
    pub fn branches(&self) -> Result<Vec<MonotoneBranch>> {
        let n = self.depth();
        (0..self.len())
            .map(|i| {
                let node = self.current()[i];
                let (domain, _) = self.pullback(i, node.image)?;
                Ok(MonotoneBranch {
                    domain,
                    image_lift: node.image,
                    min_log_deriv: node.min_log_deriv,
                    n,
                    increasing: node.orientation,
                })
            })
            .collect()
    }
}

/// The monotone branches of `g^n_ω` on `I` together with the measure of the
/// discarded part of `I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSystem {
    pub source: Arc,
    pub n: usize,
    pub branches: Vec<MonotoneBranch>,
    pub pruned_mass: f64,
    pub pruned_count: usize,
}

/// Refines `I` into monotone branches of `g^n_ω`.
pub fn refine_branches(
    map: &CircleMap,
    noise: &NoiseStream,
    source: Arc,
    n: usize,
    cfg: BranchConfig,
) -> Result<BranchSystem> {
    let mut tracker = BranchTracker::new(map, *noise, (source.lo, source.hi), cfg)?;
    for _ in 0..n {
        tracker.step()?;
    }
    let branches = tracker.branches()?;
    let covered: f64 = branches.iter().map(|b| b.domain.1 - b.domain.0).sum();
    Ok(BranchSystem {
        source,
        n,
        pruned_mass: (source.length() - covered).max(0.0),
        pruned_count: tracker.pruned_count(),
        branches,
    })
}
