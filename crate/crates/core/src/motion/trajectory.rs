use std::fmt::Write as _;
use std::path::Path;

use super::spline::CubicSpline;
use crate::error::{Error, Result};

/// Stance intervals per foot as fractions of the cycle, half-open `[start, end)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContactSchedule {
    pub left: Vec<(f64, f64)>,
    pub right: Vec<(f64, f64)>,
}

impl ContactSchedule {
    pub fn in_stance(&self, phase: f64) -> [bool; 2] {
        let hit = |iv: &[(f64, f64)]| iv.iter().any(|&(s, e)| phase >= s && phase < e);
        [hit(&self.left), hit(&self.right)]
    }

    fn validate(&self) -> Result<()> {
        for (label, iv) in [("left", &self.left), ("right", &self.right)] {
            for &(s, e) in iv {
                if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&e) || s > e {
                    return Err(Error::Trajectory(format!(
                        "{label} stance interval {s}:{e} must satisfy 0 <= start <= end <= 1"
                    )));
                }
            }
            let mut sorted = iv.clone();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            if sorted.windows(2).any(|w| w[1].0 < w[0].1) {
                return Err(Error::Trajectory(format!(
                    "{label} stance intervals overlap"
                )));
            }
        }
        for &(ls, le) in &self.left {
            for &(rs, re) in &self.right {
                if ls < re && rs < le {
                    return Err(Error::Trajectory(
                        "double stance is not supported for running gait".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn format_intervals(iv: &[(f64, f64)]) -> String {
    iv.iter()
        .map(|(s, e)| format!("{s}:{e}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_intervals(text: &str, line: usize) -> Result<Vec<(f64, f64)>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|part| {
            let (a, b) = part.split_once(':').ok_or_else(|| Error::Parse {
                line,
                message: format!("stance interval `{part}` must be start:end"),
            })?;
            let num = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    message: format!("bad stance bound `{s}`: {e}"),
                })
            };
            Ok((num(a)?, num(b)?))
        })
        .collect()
}

/// One interpolated state of the prescribed motion.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionSample {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
    /// Stance flags, left then right.
    pub contact: [bool; 2],
}

/// Time-parameterized joint coordinates with a contact schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct GaitTrajectory {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// One coordinate vector per timestamp.
    pub samples: Vec<Vec<f64>>,
    pub cycle_duration: f64,
    pub periodic: bool,
    pub contact: ContactSchedule,
    splines: Vec<CubicSpline>,
}

impl GaitTrajectory {
    pub fn new(
        names: Vec<String>,
        times: Vec<f64>,
        samples: Vec<Vec<f64>>,
        cycle_duration: f64,
        periodic: bool,
        contact: ContactSchedule,
    ) -> Result<Self> {
        if times.len() != samples.len() {
            return Err(Error::Dimension {
                context: "trajectory samples",
                expected: times.len(),
                actual: samples.len(),
            });
        }
        if let Some(i) = samples.iter().position(|s| s.len() != names.len()) {
            return Err(Error::Trajectory(format!(
                "sample {i} has {} coordinates, expected {}",
                samples[i].len(),
                names.len()
            )));
        }
        if !(cycle_duration.is_finite() && cycle_duration > 0.0) {
            return Err(Error::Trajectory(format!(
                "cycle duration must be positive, got {cycle_duration}"
            )));
        }
        if let Some(w) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Trajectory(format!(
                "timestamps not strictly increasing at sample {} ({} -> {})",
                w + 1,
                times[w],
                times[w + 1]
            )));
        }
        contact.validate()?;
        if periodic {
            let span = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
            if (span - cycle_duration).abs() > 1e-9 * cycle_duration.max(1.0) {
                return Err(Error::Trajectory(format!(
                    "periodic trajectory spans {span} s but declares cycle_duration {cycle_duration}"
                )));
            }
        }
        let splines = (0..names.len())
            .map(|c| {
                let y: Vec<f64> = samples.iter().map(|s| s[c]).collect();
                if periodic {
                    CubicSpline::periodic(&times, &y)
                } else {
                    CubicSpline::natural(&times, &y)
                }
                .map_err(|e| Error::Trajectory(format!("column `{}`: {e}", names[c])))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            names,
            times,
            samples,
            cycle_duration,
            periodic,
            contact,
            splines,
        })
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("validated non-empty")
    }

    /// Map `t` into the stored time span.
    fn local_time(&self, t: f64) -> Result<f64> {
        let (a, b) = (self.start(), self.end());
        if self.periodic {
            Ok(a + (t - a).rem_euclid(self.cycle_duration))
        } else if t < a || t > b {
            Err(Error::OutOfRange {
                t,
                start: a,
                end: b,
            })
        } else {
            Ok(t)
        }
    }

    /// Cycle fraction in `[0, 1)` for absolute time `t`.
    pub fn phase(&self, t: f64) -> f64 {
        ((t - self.start()) / self.cycle_duration).rem_euclid(1.0)
    }

    pub fn sample(&self, t: f64) -> Result<MotionSample> {
        let tl = self.local_time(t)?;
        let n = self.names.len();
        let mut out = MotionSample {
            q: Vec::with_capacity(n),
            qd: Vec::with_capacity(n),
            qdd: Vec::with_capacity(n),
            contact: self.contact.in_stance(self.phase(t)),
        };
        for s in &self.splines {
            let (v, d, dd) = s.eval(tl);
            out.q.push(v);
            out.qd.push(d);
            out.qdd.push(dd);
        }
        Ok(out)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Serialize to the trajectory CSV format.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# cycle_duration = {}", self.cycle_duration);
        let _ = writeln!(out, "# periodic = {}", self.periodic);
        let _ = writeln!(out, "# stance_L = {}", format_intervals(&self.contact.left));
        let _ = writeln!(
            out,
            "# stance_R = {}",
            format_intervals(&self.contact.right)
        );
        let mut header = vec!["time".to_string()];
        header.extend(self.names.iter().cloned());
        header.push("contact_L".into());
        header.push("contact_R".into());
        let _ = writeln!(out, "{}", header.join(","));
        let mut units = vec!["s".to_string()];
        units.extend(self.names.iter().map(|n| unit_for(n).to_string()));
        units.push("bool".into());
        units.push("bool".into());
        let _ = writeln!(out, "# {}", units.join(","));
        for (t, row) in self.times.iter().zip(&self.samples) {
            let c = self.contact.in_stance(self.phase(*t));
            let mut fields: Vec<String> = Vec::with_capacity(row.len() + 3);
            fields.push(t.to_string());
            fields.extend(row.iter().map(|v| v.to_string()));
            fields.push(u8::from(c[0]).to_string());
            fields.push(u8::from(c[1]).to_string());
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

fn unit_for(name: &str) -> &'static str {
    if name.ends_with("_tx") || name.ends_with("_ty") || name.ends_with("_tz") {
        "m"
    } else {
        "rad"
    }
}

/// Parse the trajectory CSV format.
pub fn parse_trajectory(text: &str) -> Result<GaitTrajectory> {
    let mut cycle_duration = None;
    let mut periodic = None;
    let mut stance_l = None;
    let mut stance_r = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let Some(body) = trimmed.strip_prefix('#') else {
            break;
        };
        let Some((key, value)) = body.split_once('=') else {
            continue;
        };
        let value = value.trim();
        match key.trim() {
            "cycle_duration" => {
                cycle_duration = Some(value.parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("cycle_duration: {e}"),
                })?)
            }
            "periodic" => {
                periodic = Some(value.parse::<bool>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("periodic: {e}"),
                })?)
            }
            "stance_L" => stance_l = Some(parse_intervals(value, line_no)?),
            "stance_R" => stance_r = Some(parse_intervals(value, line_no)?),
            other => log::warn!("trajectory line {line_no}: ignoring unknown key `{other}`"),
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            line,
            message: e.to_string(),
        }
    };
    let headers = reader.headers().map_err(csv_err)?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.first() != Some(&"time") {
        return Err(Error::Parse {
            line: reader.position().line() as usize,
            message: "first column must be `time`".into(),
        });
    }
    let cl = cols.iter().position(|c| *c == "contact_L");
    let cr = cols.iter().position(|c| *c == "contact_R");
    let coord_cols: Vec<usize> = (1..cols.len())
        .filter(|&i| Some(i) != cl && Some(i) != cr)
        .collect();
    let names: Vec<String> = coord_cols.iter().map(|&i| cols[i].to_string()).collect();

    let mut times = Vec::new();
    let mut samples = Vec::new();
    let mut flags: Vec<[bool; 2]> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let num = |i: usize| -> Result<f64> {
            let field = rec.get(i).unwrap_or("");
            field.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("column `{}`: `{field}` is not a number", cols[i]),
            })
        };
        times.push(num(0)?);
        samples.push(
            coord_cols
                .iter()
                .map(|&i| num(i))
                .collect::<Result<Vec<_>>>()?,
        );
        let flag = |c: Option<usize>| -> Result<bool> {
            Ok(c.map(num).transpose()?.is_some_and(|v| v != 0.0))
        };
        flags.push([flag(cl)?, flag(cr)?]);
    }
    if times.len() < 2 {
        return Err(Error::Trajectory(
            "trajectory needs at least two rows".into(),
        ));
    }
    let periodic = periodic.unwrap_or(false);
    let cycle_duration = cycle_duration.unwrap_or(times[times.len() - 1] - times[0]);

    let contact = match (stance_l, stance_r) {
        (Some(left), Some(right)) => ContactSchedule { left, right },
        (l, r) => {
            let inferred = infer_schedule(&times, &flags, cycle_duration);
            ContactSchedule {
                left: l.unwrap_or(inferred.left),
                right: r.unwrap_or(inferred.right),
            }
        }
    };
    let traj = GaitTrajectory::new(names, times, samples, cycle_duration, periodic, contact)?;
    let mismatches = traj
        .times
        .iter()
        .zip(&flags)
        .filter(|(t, f)| {
            (cl.is_some() || cr.is_some()) && traj.contact.in_stance(traj.phase(**t)) != **f
        })
        .count();
    if mismatches > 0 {
        log::warn!("{mismatches} rows have contact columns that disagree with the stance schedule");
    }
    Ok(traj)
}

/// Stance intervals from per-row contact flags.
fn infer_schedule(times: &[f64], flags: &[[bool; 2]], cycle: f64) -> ContactSchedule {
    let t0 = times[0];
    let frac = |t: f64| ((t - t0) / cycle).clamp(0.0, 1.0);
    let mut out = [Vec::new(), Vec::new()];
    for (side, iv) in out.iter_mut().enumerate() {
        let mut start: Option<f64> = None;
        for (i, f) in flags.iter().enumerate() {
            match (f[side], start) {
                (true, None) => start = Some(frac(times[i])),
                (false, Some(s)) => {
                    iv.push((s, frac(times[i])));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            iv.push((s, 1.0));
        }
    }
    let [left, right] = out;
    ContactSchedule { left, right }
}

pub fn load_trajectory(path: &Path) -> Result<GaitTrajectory> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Trajectory(format!("cannot read {}: {e}", path.display())))?;
    parse_trajectory(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(periodic: bool) -> GaitTrajectory {
        let n = 50;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * 0.02).collect();
        let samples = times
            .iter()
            .map(|t| vec![(2.0 * std::f64::consts::PI * t).sin(), 0.5 * t])
            .collect();
        let contact = ContactSchedule {
            left: vec![(0.0, 0.3)],
            right: vec![(0.5, 0.8)],
        };
        let mut samples: Vec<Vec<f64>> = samples;
        if periodic {
            for s in &mut samples {
                s[1] = 0.0;
            }
            samples[n][0] = samples[0][0];
        }
        GaitTrajectory::new(
            vec!["a_tx".into(), "b".into()],
            times,
            samples,
            1.0,
            periodic,
            contact,
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = small(true);
        let back = parse_trajectory(&t.to_csv_string()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn knots_reproduced() {
        let t = small(false);
        for (ti, row) in t.times.iter().zip(&t.samples) {
            let s = t.sample(*ti).unwrap();
            assert!((s.q[0] - row[0]).abs() < 1e-14);
        }
        assert!(matches!(t.sample(1.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn contact_flags() {
        let t = small(true);
        assert_eq!(t.sample(0.1).unwrap().contact, [true, false]);
        assert_eq!(t.sample(0.6).unwrap().contact, [false, true]);
        assert_eq!(t.sample(0.4).unwrap().contact, [false, false]);
        assert_eq!(t.sample(1.1).unwrap().contact, [true, false]);
    }

    #[test]
    fn duplicated_timestamp_rejected() {
        let text = "# cycle_duration = 1\ntime,a\n# s,rad\n0,0\n0.5,1\n0.5,2\n1,0\n";
        assert!(matches!(parse_trajectory(text), Err(Error::Trajectory(_))));
    }

    #[test]
    fn stance_fraction_above_one_rejected() {
        let text = "# stance_L = 0:1.2\n# stance_R = \ntime,a\n0,0\n1,1\n";
        assert!(matches!(parse_trajectory(text), Err(Error::Trajectory(_))));
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = "# cycle_duration = 1\ntime,a\n# s,rad\n0,0\n0.5,abc\n1,0\n";
        match parse_trajectory(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn double_stance_rejected() {
        let text = "# stance_L = 0:0.6\n# stance_R = 0.5:0.9\ntime,a\n0,0\n1,1\n";
        assert!(parse_trajectory(text).is_err());
    }

    #[test]
    fn schedule_inferred_from_columns() {
        let text =
            "time,a,contact_L,contact_R\n0,0,1,0\n0.25,0,1,0\n0.5,0,0,1\n0.75,0,0,0\n1,0,1,0\n";
        let t = parse_trajectory(text).unwrap();
        assert_eq!(t.contact.left, vec![(0.0, 0.5), (1.0, 1.0)]);
        assert_eq!(t.contact.right, vec![(0.5, 0.75)]);
    }
}
