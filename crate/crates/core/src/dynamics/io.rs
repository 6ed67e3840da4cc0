use std::fmt::Write as _;
use std::path::Path;

use super::{ControlSignal, Trajectory};
use crate::error::{config_err, Result};
use crate::geometry::Point;
use crate::scalar::Scalar;

pub const TRAJECTORY_HEADER: &str = "t,y1,y2,a1,a2";

impl<S: Scalar> Trajectory<S> {
    /// One row per grid time; `a1,a2` is the control on the following step
    /// (the last row repeats the final piece, or zeros when there is none).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAJECTORY_HEADER);
        out.push('\n');
        for (t, y) in self.times.iter().zip(&self.states) {
            let a = self.control.value_at(*t);
            let _ = writeln!(out, "{},{},{},{},{}", t, y.x1, y.x2, a[0], a[1]);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parses the format written by [`Trajectory::to_csv`]. The control is
    /// rebuilt with one piece per grid step.
    pub fn from_csv(text: &str, nu: S) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == TRAJECTORY_HEADER => {}
            _ => return Err(config_err!("expected header `{TRAJECTORY_HEADER}`")),
        }
        let mut times = Vec::new();
        let mut states = Vec::new();
        let mut controls = Vec::new();
        for (i, line) in lines.enumerate() {
            let cols: Vec<S> = line
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map(S::lit)
                        .map_err(|e| config_err!("row {}: {e}", i + 1))
                })
                .collect::<Result<_>>()?;
            if cols.len() != 5 {
                return Err(config_err!("row {}: expected 5 columns", i + 1));
            }
            times.push(cols[0]);
            states.push(Point::new(cols[1], cols[2]));
            controls.push([cols[3], cols[4]]);
        }
        if times.is_empty() {
            return Err(config_err!("trajectory has no rows"));
        }
        controls.pop();
        let control = ControlSignal::new(times.clone(), controls)?;
        Ok(Trajectory { times, states, control, nu, cost_breakdown: None })
    }
}
