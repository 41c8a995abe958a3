use serde::{Deserialize, Serialize};

use super::grid::AzimuthGrid;
use crate::error::{Error, Result};
use crate::signal::SAMPLE_RATE;

/// Direction of travel on the azimuth grid. Counter-clockwise (seen from
/// above) increases azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[serde(alias = "counter-clockwise")]
    Ccw,
    #[serde(alias = "clockwise")]
    Cw,
}

impl Direction {
    fn sign(self) -> i64 {
        match self {
            Direction::Ccw => 1,
            Direction::Cw => -1,
        }
    }
}

/// Piecewise-constant position: from each breakpoint's `start_sample` on, the
/// source sits at `grid_index` until the next breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub start_sample: usize,
    pub grid_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    breakpoints: Vec<Breakpoint>,
}

impl Trajectory {
    pub fn new(breakpoints: Vec<Breakpoint>) -> Result<Self> {
        match breakpoints.first() {
            None => return Err(Error::invalid("trajectory needs at least one breakpoint")),
            Some(b) if b.start_sample != 0 => {
                return Err(Error::invalid("first trajectory breakpoint must start at sample 0"))
            }
            _ => {}
        }
        if breakpoints
            .windows(2)
            .any(|w| w[1].start_sample <= w[0].start_sample)
        {
            return Err(Error::invalid(
                "trajectory breakpoints must be strictly increasing",
            ));
        }
        Ok(Self { breakpoints })
    }

    pub fn stationary(grid_index: usize) -> Self {
        Self {
            breakpoints: vec![Breakpoint {
                start_sample: 0,
                grid_index,
            }],
        }
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    /// Grid index active at sample `n`.
    pub fn index_at(&self, n: usize) -> usize {
        let pos = self.breakpoints.partition_point(|b| b.start_sample <= n);
        self.breakpoints[pos - 1].grid_index
    }

    pub fn max_index(&self) -> usize {
        self.breakpoints.iter().map(|b| b.grid_index).max().unwrap_or(0)
    }

    /// `(start, end, grid_index)` runs covering `[0, len)`.
    pub fn segments(&self, len: usize) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (i, b) in self.breakpoints.iter().enumerate() {
            if b.start_sample >= len {
                break;
            }
            let end = self
                .breakpoints
                .get(i + 1)
                .map_or(len, |n| n.start_sample.min(len));
            out.push((b.start_sample, end, b.grid_index));
        }
        out
    }

    /// Number of direction reversals along the path.
    pub fn reflections(&self) -> usize {
        let steps: Vec<i64> = self
            .breakpoints
            .windows(2)
            .map(|w| w[1].grid_index as i64 - w[0].grid_index as i64)
            .filter(|d| *d != 0)
            .collect();
        steps.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
    }

    /// Per-frame grid labels: frame `t` takes the index active at its first
    /// sample `t·hop`.
    pub fn frame_labels(&self, frames: usize, hop: usize) -> Vec<usize> {
        (0..frames).map(|t| self.index_at(t * hop)).collect()
    }
}

/// A grid walk at constant angular speed. The source advances one grid step
/// each time its continuous travel reaches the next step, so it dwells
/// `step/velocity` seconds per azimuth; at either end of the grid it reflects.
pub fn make_trajectory(
    start_deg: f64,
    velocity_deg_per_s: f64,
    direction: Direction,
    duration_s: f64,
    grid: &AzimuthGrid,
) -> Result<Trajectory> {
    let start = grid
        .index_of(start_deg)
        .ok_or_else(|| Error::invalid(format!("start azimuth {start_deg} is not on the grid")))?;
    if !(velocity_deg_per_s > 0.0) || !velocity_deg_per_s.is_finite() {
        return Err(Error::invalid(format!(
            "velocity must be positive, got {velocity_deg_per_s}"
        )));
    }
    if !(duration_s > 0.0) {
        return Err(Error::invalid("trajectory duration must be positive"));
    }
    let total = (duration_s * SAMPLE_RATE as f64).round() as usize;
    let dwell_samples = grid.step_deg * SAMPLE_RATE as f64 / velocity_deg_per_s;
    let mut breakpoints = vec![Breakpoint {
        start_sample: 0,
        grid_index: start,
    }];
    if grid.count == 1 {
        return Trajectory::new(breakpoints);
    }
    let last = grid.count as i64 - 1;
    let mut index = start as i64;
    let mut dir = direction.sign();
    for k in 1.. {
        let at = (k as f64 * dwell_samples - 1e-9).ceil() as usize;
        if at >= total {
            break;
        }
        if index + dir < 0 || index + dir > last {
            dir = -dir;
        }
        index += dir;
        breakpoints.push(Breakpoint {
            start_sample: at,
            grid_index: index as usize,
        });
    }
    Trajectory::new(breakpoints)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dwell_at_ten_degrees_per_second() {
        let g = AzimuthGrid::frontal();
        let t = make_trajectory(0.0, 10.0, Direction::Ccw, 1.0, &g).unwrap();
        assert_eq!(
            t.breakpoints(),
            &[
                Breakpoint {
                    start_sample: 0,
                    grid_index: 18
                },
                Breakpoint {
                    start_sample: 8000,
                    grid_index: 19
                }
            ]
        );
        assert_eq!(g.degrees(t.index_at(8000)).unwrap(), 5.0);
        assert_eq!(t.index_at(7999), 18);
    }

    #[test]
    fn reflects_immediately_at_upper_edge() {
        let g = AzimuthGrid::frontal();
        let t = make_trajectory(90.0, 10.0, Direction::Ccw, 2.0, &g).unwrap();
        let idx: Vec<usize> = t.breakpoints().iter().map(|b| b.grid_index).collect();
        assert_eq!(idx, vec![36, 35, 34, 33]);
        let t = make_trajectory(-90.0, 10.0, Direction::Cw, 1.0, &g).unwrap();
        assert_eq!(t.breakpoints()[1].grid_index, 1);
    }

    #[test]
    fn slow_long_walk_always_reflects() {
        let g = AzimuthGrid::frontal();
        // 8 deg/s over 24 s covers 192 degrees of travel, more than the 180 degree span
        assert!((8.0f64 * 24.0 - 192.0).abs() < 1e-12);
        for start in g.azimuths() {
            for dir in [Direction::Ccw, Direction::Cw] {
                let t = make_trajectory(start, 8.0, dir, 24.0, &g).unwrap();
                // one step every 0.625 s: steps at k * 10000 samples, k = 1..=38
                assert_eq!(t.breakpoints().len(), 39);
                assert!(t.reflections() >= 1, "start {start} {dir:?}");
            }
        }
    }

    #[test]
    fn off_grid_start_rejected() {
        let g = AzimuthGrid::frontal();
        assert!(make_trajectory(2.0, 10.0, Direction::Ccw, 1.0, &g).is_err());
        assert!(make_trajectory(0.0, 0.0, Direction::Ccw, 1.0, &g).is_err());
    }

    #[test]
    fn breakpoints_validated() {
        let b = |s, g| Breakpoint {
            start_sample: s,
            grid_index: g,
        };
        assert!(Trajectory::new(vec![]).is_err());
        assert!(Trajectory::new(vec![b(1, 0)]).is_err());
        assert!(Trajectory::new(vec![b(0, 0), b(5, 1), b(5, 2)]).is_err());
        let t = Trajectory::new(vec![b(0, 3), b(10, 4)]).unwrap();
        assert_eq!(t.segments(15), vec![(0, 10, 3), (10, 15, 4)]);
        assert_eq!(t.segments(8), vec![(0, 8, 3)]);
        assert_eq!(t.frame_labels(3, 5), vec![3, 3, 4]);
    }
}
