//! Finite discretizations of the type space.

use crate::instance::{Instance, TypeProfile, SNAP};

/// Default cap on the number of scenarios in a grid.
pub const DEFAULT_SCENARIO_CAP: usize = 1_000_000;

/// A finite product grid: one sorted axis of type values per agent.
/// The scenario set is the Cartesian product, iterated in lexicographic
/// order (agent 1 slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GridError {
    #[error("points_per_agent must be >= 2 (got {0})")]
    TooFewPoints(usize),
    #[error("anchor {value} for agent {agent} outside [{lo}, {hi}]")]
    AnchorOutOfBounds {
        agent: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("grid has {got} scenarios, exceeding the cap of {cap}")]
    TooManyScenarios { got: usize, cap: usize },
    #[error("axis count {got} does not match agent count {want}")]
    AxisCount { got: usize, want: usize },
    #[error("axis {agent} must contain both interval endpoints")]
    MissingEndpoint { agent: usize },
    #[error("axis {agent} value {value} outside [{lo}, {hi}]")]
    AxisValueOutOfBounds {
        agent: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

impl Grid {
    /// Builds a grid from per-agent axes, deduplicating (tolerance `SNAP`)
    /// and sorting. Each axis must contain the agent's interval endpoints.
    pub fn from_axes(inst: &Instance, axes: Vec<Vec<f64>>, cap: usize) -> Result<Grid, GridError> {
        if axes.len() != inst.num_agents() {
            return Err(GridError::AxisCount {
                got: axes.len(),
                want: inst.num_agents(),
            });
        }
        let mut clean = Vec::with_capacity(axes.len());
        for (i, mut axis) in axes.into_iter().enumerate() {
            axis.sort_by(|a, b| a.partial_cmp(b).unwrap());
            axis.dedup_by(|a, b| (*a - *b).abs() <= SNAP);
            let (lo, hi) = (inst.t_lo(i), inst.t_hi(i));
            if let Some(&v) = axis
                .iter()
                .find(|&&v| v < lo - SNAP || v > hi + SNAP)
            {
                return Err(GridError::AxisValueOutOfBounds {
                    agent: i + 1,
                    value: v,
                    lo,
                    hi,
                });
            }
            let has = |v: f64| axis.iter().any(|&x| (x - v).abs() <= SNAP);
            if !has(lo) || !has(hi) {
                return Err(GridError::MissingEndpoint { agent: i + 1 });
            }
            // Pin the extremes to the exact interval endpoints.
            if let Some(first) = axis.first_mut() {
                if (*first - lo).abs() <= SNAP {
                    *first = lo;
                }
            }
            if let Some(last) = axis.last_mut() {
                if (*last - hi).abs() <= SNAP {
                    *last = hi;
                }
            }
            clean.push(axis);
        }
        let size = clean.iter().map(Vec::len).product::<usize>();
        if size > cap {
            return Err(GridError::TooManyScenarios { got: size, cap });
        }
        Ok(Grid { axes: clean })
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn axis(&self, agent: usize) -> &[f64] {
        &self.axes[agent]
    }

    pub fn num_agents(&self) -> usize {
        self.axes.len()
    }

    /// Number of scenarios in the product.
    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The scenario at flat index `idx` (lexicographic, last axis fastest).
    pub fn scenario(&self, idx: usize) -> TypeProfile {
        let mut rem = idx;
        let mut t = vec![0.0; self.axes.len()];
        for (i, axis) in self.axes.iter().enumerate().rev() {
            t[i] = axis[rem % axis.len()];
            rem /= axis.len();
        }
        TypeProfile(t)
    }

    /// All scenarios in flat-index order.
    pub fn scenarios(&self) -> impl Iterator<Item = TypeProfile> + '_ {
        (0..self.len()).map(move |i| self.scenario(i))
    }

    /// Per-agent axis indices of the scenario at flat index `idx`.
    pub fn unravel(&self, idx: usize) -> Vec<usize> {
        let mut rem = idx;
        let mut out = vec![0usize; self.axes.len()];
        for (i, axis) in self.axes.iter().enumerate().rev() {
            out[i] = rem % axis.len();
            rem /= axis.len();
        }
        out
    }

    /// Flat index from per-agent axis indices.
    pub fn ravel(&self, indices: &[usize]) -> usize {
        let mut idx = 0usize;
        for (axis, &k) in self.axes.iter().zip(indices) {
            idx = idx * axis.len() + k;
        }
        idx
    }

    /// Flat index whose scenario equals `t` within `SNAP`, if any.
    pub fn position(&self, t: &[f64]) -> Option<usize> {
        let mut indices = Vec::with_capacity(self.axes.len());
        for (axis, &v) in self.axes.iter().zip(t) {
            indices.push(axis.iter().position(|&x| (x - v).abs() <= SNAP)?);
        }
        Some(self.ravel(&indices))
    }

    /// Flat index of the scenario obtained from `idx` by substituting axis
    /// value `k` for agent `i`.
    pub fn substitute(&self, idx: usize, agent: usize, k: usize) -> usize {
        let mut indices = self.unravel(idx);
        indices[agent] = k;
        self.ravel(&indices)
    }
}

/// Uniform grid of `points_per_agent` values per agent, unioned with the
/// interval endpoints, the mean bounds (when present), and any anchors.
pub fn make_grid(
    inst: &Instance,
    points_per_agent: usize,
    anchors: &[Vec<f64>],
) -> Result<Grid, GridError> {
    make_grid_capped(inst, points_per_agent, anchors, DEFAULT_SCENARIO_CAP)
}

pub fn make_grid_capped(
    inst: &Instance,
    points_per_agent: usize,
    anchors: &[Vec<f64>],
    cap: usize,
) -> Result<Grid, GridError> {
    if points_per_agent < 2 {
        return Err(GridError::TooFewPoints(points_per_agent));
    }
    let mut axes = Vec::with_capacity(inst.num_agents());
    for i in 0..inst.num_agents() {
        let (lo, hi) = (inst.t_lo(i), inst.t_hi(i));
        let mut axis: Vec<f64> = vec![lo, hi];
        axis.extend(
            (1..points_per_agent.saturating_sub(1))
                .map(|k| lo + (hi - lo) * k as f64 / (points_per_agent - 1) as f64),
        );
        for mu in [inst.mu_lo(i), inst.mu_hi(i)].into_iter().flatten() {
            if mu >= lo && mu <= hi {
                axis.push(mu);
            }
        }
        if let Some(list) = anchors.get(i) {
            for &a in list {
                if a < lo - SNAP || a > hi + SNAP {
                    return Err(GridError::AnchorOutOfBounds {
                        agent: i + 1,
                        value: a,
                        lo,
                        hi,
                    });
                }
                axis.push(a);
            }
        }
        axes.push(axis);
    }
    Grid::from_axes(inst, axes, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{remark1_instance, remark2_instance};

    #[test]
    fn remark1_axis_unions_anchor() {
        let inst = remark1_instance();
        let grid = make_grid(&inst, 3, &[vec![], vec![3.0]]).unwrap();
        assert_eq!(grid.axis(1), &[0.0, 3.0, 5.0, 10.0]);
    }

    #[test]
    fn remark2_axis_includes_mean_bounds() {
        let inst = remark2_instance();
        let grid = make_grid(&inst, 2, &[]).unwrap();
        assert_eq!(grid.axis(0), &[1.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn single_point_grid_rejected() {
        let inst = remark1_instance();
        assert_eq!(
            make_grid(&inst, 1, &[]).unwrap_err(),
            GridError::TooFewPoints(1)
        );
    }

    #[test]
    fn cap_is_enforced() {
        let inst = remark1_instance();
        let err = make_grid_capped(&inst, 100, &[], 50).unwrap_err();
        assert!(matches!(err, GridError::TooManyScenarios { .. }));
    }

    #[test]
    fn scenarios_are_lexicographic_and_indexable() {
        let inst = remark1_instance();
        let grid = make_grid(&inst, 2, &[]).unwrap();
        let all: Vec<_> = grid.scenarios().collect();
        assert_eq!(all[0].as_slice(), &[2.0, 0.0]);
        assert_eq!(all[1].as_slice(), &[2.0, 10.0]);
        assert_eq!(all[2].as_slice(), &[8.0, 0.0]);
        for (i, t) in all.iter().enumerate() {
            assert_eq!(grid.position(t.as_slice()), Some(i));
        }
        assert!(grid
            .scenarios()
            .all(|t| inst.contains(&t)));
    }

    #[test]
    fn anchors_outside_bounds_rejected() {
        let inst = remark1_instance();
        let err = make_grid(&inst, 2, &[vec![1.0], vec![]]).unwrap_err();
        assert!(matches!(err, GridError::AnchorOutOfBounds { agent: 1, .. }));
    }
}
