//! Orographic wind environment: an analytic ramp-updraft model, a loader for
//! externally computed gridded fields, and the excess-updraft feasibility
//! measure.
//!
//! Flow convention: the free stream blows toward +x, so a wind-facing aircraft
//! holds yaw ≈ π. Updrafts have `w < 0` (NED z is down).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::AeroModel;
use crate::config::ConfigError;
use crate::math::Vec3;
use crate::Real;

/// Wind velocity in NED, m/s. `u` along +x (downstream), `w` positive down.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindVector<T> {
    pub u: T,
    pub v: T,
    pub w: T,
}

impl<T: Real> WindVector<T> {
    pub fn new(u: T, v: T, w: T) -> Self {
        Self { u, v, w }
    }

    pub fn zeros() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn as_vec3(self) -> Vec3<T> {
        Vec3::new(self.u, self.v, self.w)
    }

    pub fn horizontal_speed(self) -> T {
        (self.u * self.u + self.v * self.v).sqrt()
    }

    /// Upward wind speed (positive for an updraft).
    pub fn upward(self) -> T {
        -self.w
    }

    pub fn is_finite(self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.w.is_finite()
    }
}

/// Wind query result; `extrapolated` marks nearest-boundary clamping outside a
/// grid hull.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindSample<T> {
    pub wind: WindVector<T>,
    pub extrapolated: bool,
}

/// Parameters of the analytic ramp-updraft model.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RampFieldParams<T> {
    /// Free-stream speed far upstream, m/s.
    pub nominal_speed: T,
    /// Ramp inclination, rad.
    pub slope_angle: T,
    /// x where the ramp foot starts, m.
    pub ramp_start_x: T,
    /// Plate length along the slope, m.
    pub ramp_length: T,
    /// Plate width (spanwise), m. The model is y-invariant; the width is kept
    /// for terrain/record purposes.
    pub ramp_width: T,
    /// e-folding height of the updraft above local terrain, m.
    pub updraft_decay_height: T,
    /// Peak fractional horizontal speed-up near the crest.
    pub speedup_factor: T,
}

impl<T: Real> RampFieldParams<T> {
    /// 32° plate, 2.4 m along the slope, 3.6 m wide, with calibration values
    /// for the speed-up and updraft decay.
    pub fn standard(nominal_speed: T) -> Self {
        Self {
            nominal_speed,
            slope_angle: T::of(32f64.to_radians()),
            ramp_start_x: T::zero(),
            ramp_length: T::of(2.4),
            ramp_width: T::of(3.6),
            updraft_decay_height: T::of(1.0),
            speedup_factor: T::of(0.3),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::invalid(format!("ramp field: {m}")));
        if !(self.nominal_speed > T::zero()) {
            return bad("nominal_speed must be positive");
        }
        if !(self.slope_angle > T::zero() && self.slope_angle < T::FRAC_PI_2()) {
            return bad("slope_angle must lie in (0, pi/2)");
        }
        if !(self.ramp_length > T::zero() && self.ramp_width > T::zero()) {
            return bad("ramp_length and ramp_width must be positive");
        }
        if !(self.updraft_decay_height > T::zero()) {
            return bad("updraft_decay_height must be positive");
        }
        if self.speedup_factor < T::zero() || self.speedup_factor > T::of(3.0) {
            return bad("speedup_factor must lie in [0, 3]");
        }
        Ok(())
    }

    /// Horizontal run of the slope, m.
    pub fn horizontal_run(&self) -> T {
        self.ramp_length * self.slope_angle.cos()
    }

    /// x of the crest, m.
    pub fn crest_x(&self) -> T {
        self.ramp_start_x + self.horizontal_run()
    }

    /// Terrain height at the crest, m.
    pub fn crest_height(&self) -> T {
        self.ramp_length * self.slope_angle.sin()
    }
}

fn smoothstep01<T: Real>(t: T) -> T {
    let t = t.max(T::zero()).min(T::one());
    t * t * (T::of(3.0) - T::of(2.0) * t)
}

/// Analytic ramp flow: free stream far upstream, surface-parallel flow over
/// the slope with exponential updraft decay in height, and a horizontal
/// speed-up peaking at the crest that relaxes downstream.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RampField<T> {
    pub params: RampFieldParams<T>,
}

impl<T: Real> RampField<T> {
    pub fn new(params: RampFieldParams<T>) -> Result<Self, ConfigError> {
        params.validate()?;
        Ok(Self { params })
    }

    /// Terrain height above z = 0: flat floor, inclined plate, plateau behind
    /// the crest.
    pub fn terrain_height(&self, x: T) -> T {
        let p = &self.params;
        if x <= p.ramp_start_x {
            T::zero()
        } else if x >= p.crest_x() {
            p.crest_height()
        } else {
            (x - p.ramp_start_x) * p.slope_angle.tan()
        }
    }

    fn wind_at(&self, pos: Vec3<T>) -> WindVector<T> {
        let p = &self.params;
        let run = p.horizontal_run();
        let crest = p.crest_x();
        let altitude = -pos.z;
        // below-terrain queries use the surface-adjacent value
        let height = (altitude - self.terrain_height(pos.x)).max(T::zero());
        let vertical = (-height / p.updraft_decay_height).exp();

        let relax = if pos.x > crest {
            let d = (pos.x - crest) / run;
            (-d * d).exp()
        } else {
            T::one()
        };
        // the deflection starts upstream of the foot and saturates by
        // mid-slope, so the surface flow is slope-parallel over the plate
        let tilt_shape = smoothstep01((pos.x - p.ramp_start_x + run * T::of(0.5)) / run) * relax;
        let speed_shape = smoothstep01((pos.x - p.ramp_start_x) / run) * relax;

        let tilt = p.slope_angle * tilt_shape * vertical;
        let speed = p.nominal_speed * (T::one() + p.speedup_factor * speed_shape * vertical);
        WindVector::new(speed * tilt.cos(), T::zero(), -speed * tilt.sin())
    }
}

/// Regular lattice of wind samples with multilinear interpolation.
///
/// 2-D fields (x, z) are y-invariant. Queries outside the hull clamp to the
/// nearest boundary and are flagged as extrapolated.
#[derive(Clone, Debug)]
pub struct GridField<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    zs: Vec<T>,
    /// Index order: x-major, then y, then z.
    data: Vec<WindVector<T>>,
    two_d: bool,
}

#[derive(Debug, Error)]
pub enum GridParseError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line 1: expected header `x,y,z,u,v,w` or `x,z,u,v,w`, found `{0}`")]
    Header(String),
    #[error("line {line}: {msg}")]
    Row { line: usize, msg: String },
    #[error("empty lattice: no data rows")]
    EmptyLattice,
    #[error("lattice: {0}")]
    Lattice(String),
}

impl<T: Real> GridField<T> {
    fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.ys.len() + iy) * self.zs.len() + iz
    }

    pub fn node(&self, ix: usize, iy: usize, iz: usize) -> WindVector<T> {
        self.data[self.index(ix, iy, iz)]
    }

    /// Locates `v` on `axis`, clamping to the hull: returns (lower cell index,
    /// interpolation weight, clamped?).
    fn locate(axis: &[T], v: T) -> (usize, T, bool) {
        let n = axis.len();
        if n == 1 {
            return (0, T::zero(), false);
        }
        if v <= axis[0] {
            return (0, T::zero(), v < axis[0]);
        }
        if v >= axis[n - 1] {
            return (n - 2, T::one(), v > axis[n - 1]);
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if axis[mid] <= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, (v - axis[lo]) / (axis[lo + 1] - axis[lo]), false)
    }

    fn wind_at(&self, pos: Vec3<T>) -> WindSample<T> {
        let (ix, tx, cx) = Self::locate(&self.xs, pos.x);
        let (iy, ty, cy) = if self.two_d {
            (0, T::zero(), false)
        } else {
            Self::locate(&self.ys, pos.y)
        };
        let (iz, tz, cz) = Self::locate(&self.zs, pos.z);

        let mut acc = Vec3::zeros();
        let one = T::one();
        for (dx, wx) in [(0usize, one - tx), (1, tx)] {
            if wx == T::zero() {
                continue;
            }
            for (dy, wy) in [(0usize, one - ty), (1, ty)] {
                if wy == T::zero() {
                    continue;
                }
                for (dz, wz) in [(0usize, one - tz), (1, tz)] {
                    if wz == T::zero() {
                        continue;
                    }
                    let node = self.node(ix + dx, iy + dy, iz + dz);
                    acc += node.as_vec3() * (wx * wy * wz);
                }
            }
        }
        WindSample {
            wind: WindVector::new(acc.x, acc.y, acc.z),
            extrapolated: cx || cy || cz,
        }
    }
}

/// Wind environment queried by the simulator. Immutable once built; safe to
/// share across simulation workers.
#[derive(Clone, Debug)]
pub enum WindField<T> {
    Uniform(WindVector<T>),
    Ramp(RampField<T>),
    Grid(GridField<T>),
}

impl<T: Real> WindField<T> {
    /// Wind at `pos` (time-invariant fields).
    pub fn wind_at(&self, pos: Vec3<T>) -> WindSample<T> {
        self.wind_at_time(pos, T::zero())
    }

    /// Wind at `pos` and `time`. The time argument is reserved for future
    /// gust models; all current fields are constant in time.
    pub fn wind_at_time(&self, pos: Vec3<T>, _time: T) -> WindSample<T> {
        match self {
            WindField::Uniform(w) => WindSample {
                wind: *w,
                extrapolated: false,
            },
            WindField::Ramp(r) => WindSample {
                wind: r.wind_at(pos),
                extrapolated: false,
            },
            WindField::Grid(g) => g.wind_at(pos),
        }
    }

    /// Terrain height above z = 0 under `(x, y)`; zero for fields without
    /// terrain information.
    pub fn terrain_height(&self, x: T, _y: T) -> T {
        match self {
            WindField::Ramp(r) => r.terrain_height(x),
            _ => T::zero(),
        }
    }

    /// Excess updraft at `pos`: upward wind speed minus the aircraft's sink
    /// rate when trimmed at the local horizontal wind speed. Zero marks the
    /// feasible-soaring boundary; `None` when the aircraft cannot trim at the
    /// local airspeed.
    pub fn excess_updraft(&self, aero: &AeroModel<T>, pos: Vec3<T>) -> Option<T> {
        let wind = self.wind_at(pos).wind;
        let sink = aero.sink_rate(wind.horizontal_speed())?;
        Some(wind.upward() - sink)
    }

    /// Altitude (positive up) of the zero-excess-updraft level above terrain
    /// at `x`, searched from the surface upward.
    pub fn feasible_band_altitude(
        &self,
        aero: &AeroModel<T>,
        x: T,
        max_height_above_terrain: T,
    ) -> Option<T> {
        let terrain = self.terrain_height(x, T::zero());
        let probe = |height: T| -> Option<T> {
            let altitude = terrain + height;
            self.excess_updraft(aero, Vec3::new(x, T::zero(), -altitude))
        };
        let step = T::of(0.05);
        let mut height = T::of(0.02);
        let mut prev = (height, probe(height)?);
        while height < max_height_above_terrain {
            height += step;
            let value = probe(height)?;
            if prev.1 > T::zero() && value <= T::zero() {
                // bisect the crossing
                let (mut lo, mut hi) = (prev.0, height);
                for _ in 0..60 {
                    let mid = (lo + hi) * T::of(0.5);
                    if probe(mid)? > T::zero() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(terrain + (lo + hi) * T::of(0.5));
            }
            prev = (height, value);
        }
        None
    }
}

/// Builds the analytic ramp field after validating its parameters.
pub fn build_ramp_field<T: Real>(params: RampFieldParams<T>) -> Result<WindField<T>, ConfigError> {
    Ok(WindField::Ramp(RampField::new(params)?))
}

/// Parses a wind grid from CSV text. Header `x,y,z,u,v,w` (3-D) or
/// `x,z,u,v,w` (2-D, y-invariant); SI units; row order free; the lattice must
/// be complete and regular.
pub fn parse_grid_csv<T: Real>(text: &str) -> Result<GridField<T>, GridParseError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((i, l)) => break (i, l),
            None => return Err(GridParseError::Header(String::new())),
        }
    };
    let cols: Vec<&str> = header.1.split(',').map(|c| c.trim()).collect();
    let two_d = match cols.as_slice() {
        ["x", "y", "z", "u", "v", "w"] => false,
        ["x", "z", "u", "v", "w"] => true,
        _ => return Err(GridParseError::Header(header.1.trim().to_string())),
    };

    let mut rows: Vec<(usize, [f64; 6])> = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(|c| c.trim()).collect();
        let expect = if two_d { 5 } else { 6 };
        if fields.len() != expect {
            return Err(GridParseError::Row {
                line: line_no,
                msg: format!(
                    "expected {expect} comma-separated values, found {}",
                    fields.len()
                ),
            });
        }
        let mut parsed = [0.0f64; 6];
        for (ci, f) in fields.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| GridParseError::Row {
                line: line_no,
                msg: format!("column {} (`{f}`) is not a number", ci + 1),
            })?;
            if !v.is_finite() {
                return Err(GridParseError::Row {
                    line: line_no,
                    msg: format!("column {} is not finite", ci + 1),
                });
            }
            parsed[ci] = v;
        }
        // 2-D rows are x,z,u,v,w; widen to x,y,z,u,v,w with y = 0
        let vals = if two_d {
            [parsed[0], 0.0, parsed[1], parsed[2], parsed[3], parsed[4]]
        } else {
            parsed
        };
        rows.push((line_no, vals));
    }
    if rows.is_empty() {
        return Err(GridParseError::EmptyLattice);
    }

    let axis = |idx: usize| -> Vec<f64> {
        let mut vs: Vec<f64> = rows.iter().map(|(_, r)| r[idx]).collect();
        vs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        vs.dedup();
        vs
    };
    let xs = axis(0);
    let ys = axis(1);
    let zs = axis(2);
    for (name, ax) in [("x", &xs), ("y", &ys), ("z", &zs)] {
        if ax.len() < 2 {
            continue;
        }
        let spacing = ax[1] - ax[0];
        if spacing <= 0.0 {
            return Err(GridParseError::Lattice(format!(
                "{name} axis is degenerate"
            )));
        }
        for w in ax.windows(2) {
            let d = w[1] - w[0];
            if ((d - spacing) / spacing).abs() > 1e-6 {
                return Err(GridParseError::Lattice(format!(
                    "{name} axis spacing is not uniform ({spacing} vs {d})"
                )));
            }
        }
    }

    let n = xs.len() * ys.len() * zs.len();
    if rows.len() != n {
        return Err(GridParseError::Lattice(format!(
            "expected {} nodes for a complete {}x{}x{} lattice, found {} rows",
            n,
            xs.len(),
            ys.len(),
            zs.len(),
            rows.len()
        )));
    }
    let find = |ax: &[f64], v: f64| ax.iter().position(|&a| a == v).expect("axis member");
    let mut slots: Vec<Option<WindVector<T>>> = vec![None; n];
    for (line_no, r) in &rows {
        let ix = find(&xs, r[0]);
        let iy = find(&ys, r[1]);
        let iz = find(&zs, r[2]);
        let slot = (ix * ys.len() + iy) * zs.len() + iz;
        if slots[slot].is_some() {
            return Err(GridParseError::Row {
                line: *line_no,
                msg: format!("duplicate node ({}, {}, {})", r[0], r[1], r[2]),
            });
        }
        slots[slot] = Some(WindVector::new(T::of(r[3]), T::of(r[4]), T::of(r[5])));
    }
    let data: Vec<WindVector<T>> = slots
        .into_iter()
        .map(|s| s.ok_or_else(|| GridParseError::Lattice("missing lattice node".to_string())))
        .collect::<Result<_, _>>()?;

    Ok(GridField {
        xs: xs.into_iter().map(T::of).collect(),
        ys: ys.into_iter().map(T::of).collect(),
        zs: zs.into_iter().map(T::of).collect(),
        data,
        two_d,
    })
}

/// Loads a gridded wind field from a CSV file (see [`parse_grid_csv`]).
pub fn load_grid_field<T: Real>(path: &Path) -> Result<WindField<T>, GridParseError> {
    let text = std::fs::read_to_string(path)?;
    Ok(WindField::Grid(parse_grid_csv(&text)?))
}
