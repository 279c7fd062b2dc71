//! Named kernel sequences with known limiting behaviour.
//!
//! * `escaping_mass`: every row is `(1/n) Σ_{i=1}^n δ_i` on the real line. It
//!   converges to the zero kernel against functions vanishing at infinity
//!   while keeping unit mass.
//! * `square_wave`: input `[0, 1]`, output `{0, 1}`; row `δ_1` on the left
//!   halves of `n` equal periods and `δ_0` on the right halves. It converges
//!   weakly to the constant row `½δ_0 + ½δ_1` but stays at a fixed strong
//!   distance from it.
//! * `mollified`: Gaussian rows with bounded, equicontinuous densities whose
//!   width shrinks to a limit, so weak and strong convergence coincide.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::measure::{FiniteMeasure, InputMeasure, Point};
use crate::stochastic::StochasticKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GalleryName {
    EscapingMass,
    SquareWave,
    Mollified,
}

impl std::str::FromStr for GalleryName {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "escaping_mass" => Ok(GalleryName::EscapingMass),
            "square_wave" => Ok(GalleryName::SquareWave),
            "mollified" => Ok(GalleryName::Mollified),
            other => Err(domain(format!("unknown gallery sequence '{other}'"))),
        }
    }
}

/// Midpoints of `size` equal cells of `[0, 1]`, with equal weight.
pub fn unit_interval_grid(size: usize) -> Result<InputMeasure> {
    if size == 0 {
        return Err(domain("grid size must be >= 1"));
    }
    InputMeasure::uniform(
        (0..size)
            .map(|i| Point::scalar((i as f64 + 0.5) / size as f64))
            .collect(),
    )
}

/// `(1/n) Σ_{i=1}^n δ_i` on the real line.
pub fn escaping_mass_row(n: usize) -> Result<FiniteMeasure> {
    if n == 0 {
        return Err(domain("index n must be >= 1"));
    }
    FiniteMeasure::atomic(
        (1..=n).map(|i| Point::scalar(i as f64)).collect(),
        vec![1.0 / n as f64; n],
    )
}

pub fn escaping_mass_kernel(n: usize, input: &InputMeasure) -> Result<StochasticKernel> {
    StochasticKernel::constant(input.clone(), escaping_mass_row(n)?)
}

/// The zero kernel, which is the vague limit of the escaping-mass sequence.
pub fn escaping_mass_limit(input: &InputMeasure) -> Result<StochasticKernel> {
    StochasticKernel::sub_probability(input.clone(), vec![FiniteMeasure::zero(); input.len()])
}

/// Square-wave kernel on an aligned grid of `grid_size` cells of `[0, 1]`.
///
/// Each half-period spans `grid_size / (2n)` whole cells, so no cell
/// straddles an interval boundary.
pub fn square_wave_kernel(n: usize, grid_size: usize) -> Result<StochasticKernel> {
    if n == 0 {
        return Err(domain("index n must be >= 1"));
    }
    if grid_size < 2 || grid_size % (2 * n) != 0 {
        return Err(domain(format!(
            "grid size {grid_size} is not a positive multiple of 2n = {}",
            2 * n
        )));
    }
    let input = unit_interval_grid(grid_size)?;
    let cells_per_half = grid_size / (2 * n);
    let rows = (0..grid_size)
        .map(|i| {
            let left_half = (i / cells_per_half) % 2 == 0;
            FiniteMeasure::dirac(Point::scalar(if left_half { 1.0 } else { 0.0 }))
        })
        .collect();
    StochasticKernel::new(input, rows)
}

/// Every row `½δ_0 + ½δ_1`.
pub fn square_wave_limit(grid_size: usize) -> Result<StochasticKernel> {
    let row = FiniteMeasure::atomic(vec![Point::scalar(0.0), Point::scalar(1.0)], vec![0.5, 0.5])?;
    StochasticKernel::constant(unit_interval_grid(grid_size)?, row)
}

/// `±1` square wave on the cell midpoints: `+1` on left halves, `-1` on right.
pub fn square_wave_signs(n: usize, grid_size: usize) -> Result<Vec<f64>> {
    let k = square_wave_kernel(n, grid_size)?;
    Ok(k.rows()
        .iter()
        .map(|r| {
            if r.points()[0].coords()[0] == 1.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect())
}

/// Parameters of the mollified Gaussian sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct MollifiedSpec {
    /// Cells of the input grid on `[0, 1]`.
    pub input_grid: usize,
    /// Points of the output grid.
    pub output_grid: usize,
    pub output_lo: f64,
    pub output_hi: f64,
    /// Limiting width.
    pub sigma_limit: f64,
    /// `σ_n = σ_limit (1 + n^{-decay})`.
    pub decay: f64,
}

impl Default for MollifiedSpec {
    fn default() -> Self {
        MollifiedSpec {
            input_grid: 16,
            output_grid: 201,
            output_lo: -2.0,
            output_hi: 3.0,
            sigma_limit: 0.3,
            decay: 2.0,
        }
    }
}

impl MollifiedSpec {
    pub fn sigma(&self, n: usize) -> f64 {
        self.sigma_limit * (1.0 + (n as f64).powf(-self.decay))
    }

    fn validate(&self) -> Result<()> {
        if self.input_grid == 0 || self.output_grid < 2 {
            return Err(domain(
                "mollified grids need >= 1 input and >= 2 output points",
            ));
        }
        if !(self.output_hi > self.output_lo) {
            return Err(domain("output range is empty"));
        }
        if !(self.sigma_limit > 0.0) || !(self.decay > 0.0) {
            return Err(domain("widths and decay must be positive"));
        }
        Ok(())
    }

    /// The output grid and its uniform cell width.
    pub fn output_points(&self) -> (Vec<Point>, f64) {
        let step = (self.output_hi - self.output_lo) / (self.output_grid - 1) as f64;
        let pts = (0..self.output_grid)
            .map(|j| Point::scalar(self.output_lo + step * j as f64))
            .collect();
        (pts, step)
    }

    /// Kernel whose row at `y` is the grid-discretized `N(y, σ²)`, renormalized.
    pub fn kernel_with_sigma(&self, sigma: f64) -> Result<StochasticKernel> {
        self.validate()?;
        if !(sigma > 0.0) {
            return Err(domain("width must be positive"));
        }
        let input = unit_interval_grid(self.input_grid)?;
        let (grid, step) = self.output_points();
        let cell_weights = vec![step; grid.len()];
        let rows = input
            .points()
            .iter()
            .map(|y| {
                let center = y.coords()[0];
                gaussian_grid_density(&grid, step, center, sigma)
                    .and_then(|dens| FiniteMeasure::grid(grid.clone(), cell_weights.clone(), dens))
            })
            .collect::<Result<Vec<_>>>()?;
        StochasticKernel::new(input, rows)
    }
}

/// Gaussian density values on a 1-d grid, scaled so that `Σ f_j · step = 1`.
pub(crate) fn gaussian_grid_density(
    grid: &[Point],
    step: f64,
    center: f64,
    sigma: f64,
) -> Result<Vec<f64>> {
    let raw: Vec<f64> = grid
        .iter()
        .map(|u| {
            let z = (u.coords()[0] - center) / sigma;
            (-0.5 * z * z).exp()
        })
        .collect();
    let mass: f64 = raw.iter().map(|v| v * step).sum();
    if !(mass > 0.0) {
        return Err(domain("Gaussian row has no mass on the grid"));
    }
    Ok(raw.into_iter().map(|v| v / mass).collect())
}

/// `(γ_n, γ)` for the mollified sequence.
pub fn mollified_kernel_sequence(
    n: usize,
    spec: &MollifiedSpec,
) -> Result<(StochasticKernel, StochasticKernel)> {
    if n == 0 {
        return Err(domain("index n must be >= 1"));
    }
    Ok((
        spec.kernel_with_sigma(spec.sigma(n))?,
        spec.kernel_with_sigma(spec.sigma_limit)?,
    ))
}

/// Builds the `n`-th element and the limit of a named sequence.
///
/// `grid` is the input grid size: square-wave cells (must be a multiple of
/// `2n`), escaping-mass input points, or mollified input cells.
pub fn build(
    name: GalleryName,
    n: usize,
    grid: Option<usize>,
) -> Result<(StochasticKernel, StochasticKernel)> {
    match name {
        GalleryName::EscapingMass => {
            let input = unit_interval_grid(grid.unwrap_or(4))?;
            Ok((
                escaping_mass_kernel(n, &input)?,
                escaping_mass_limit(&input)?,
            ))
        }
        GalleryName::SquareWave => {
            let g = grid.unwrap_or(256);
            Ok((square_wave_kernel(n, g)?, square_wave_limit(g)?))
        }
        GalleryName::Mollified => {
            let spec = MollifiedSpec {
                input_grid: grid.unwrap_or(MollifiedSpec::default().input_grid),
                ..MollifiedSpec::default()
            };
            mollified_kernel_sequence(n, &spec)
        }
    }
}
