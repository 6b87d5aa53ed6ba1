//! Channel model: geometry, large- and small-scale fading, cascaded surface
//! links, and the bounded spherical CSI-error model.
//!
//! # Overview
//!
//! A base station with `N` antennas serves two user groups through a
//! transmitting-and-reflecting surface with `M` elements mounted in the x–z
//! plane: users with `y` below the surface sit in the *reflection* space
//! (same side as the base station), users beyond it in the *transmission*
//! space. Each user and each per-space eavesdropper sees
//!
//! * a direct link `h` (length `N`), and
//! * a cascaded link `G = diag(g^H) H_b` (size `M x N`) through the surface,
//!
//! where `H_b` is the base-station-to-surface matrix and `g` the
//! surface-to-endpoint vector. Channel state is known imperfectly: the true
//! links are `h = h_hat + dh`, `G = G_hat + dG` with `||dh||_2 <= xi` and
//! `||dG||_F <= zeta`, the radii proportional to the estimated link norms.
//!
//! [`generate_realization`] draws one deterministic estimated/true channel
//! pair per seed; [`sample_in_ball`] / [`sample_on_sphere`] provide the error
//! draws used by robustness audits.
//!
//! # Example
//!
//! ```
//! use star_see::channel::{generate_realization, Geometry, SystemParams, UncertaintyConfig};
//!
//! let params = SystemParams { n: 3, m: 8, j_r: 1, j_t: 1, ..SystemParams::default() };
//! let real = generate_realization(&params, &Geometry::default(),
//!                                 &UncertaintyConfig::default(), 7).unwrap();
//! assert_eq!(real.bobs[0][0].hhat.len(), 3);
//! assert_eq!(real.bobs[1][0].ghat.shape(), (8, 3));
//! // Error vectors respect their certified radii.
//! assert!(real.bobs[0][0].err_h.norm() <= real.bobs[0][0].xi * (1.0 + 1e-12));
//! ```

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::units::db_to_linear;
use crate::C64;

/// Index of the reflection space (base-station side of the surface).
pub const SPACE_R: usize = 0;
/// Index of the transmission space (far side of the surface).
pub const SPACE_T: usize = 1;
/// Number of half-spaces the surface partitions the scene into.
pub const NUM_SPACES: usize = 2;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Scenario-level dimensions, power budget, and rate thresholds.
///
/// Defaults reproduce the reference scenario: a 5-antenna base station, a
/// 20-element surface, two users per space, one eavesdropper per space,
/// 40 dBm transmit budget, 10 W base-station circuit power, 10 dBm per-user
/// circuit power, 10 mW per-element surface power, unit amplifier
/// inefficiency, rate thresholds 1.5 / 0.6 b/s/Hz, and −80 dBm noise.
#[derive(Clone, Debug)]
pub struct SystemParams {
    /// Base-station antennas `N`.
    pub n: usize,
    /// Surface elements `M`.
    pub m: usize,
    /// Users in the reflection space.
    pub j_r: usize,
    /// Users in the transmission space.
    pub j_t: usize,
    /// Eavesdroppers per space.
    pub eves_per_space: usize,
    /// Transmit power budget `P_max` in watts.
    pub p_max: f64,
    /// Base-station circuit power in watts.
    pub p_bs: f64,
    /// Per-user circuit power in watts.
    pub p_user: f64,
    /// Per-surface-element circuit power in watts.
    pub p_elem: f64,
    /// Amplifier inefficiency factor multiplying radiated power (>= 1 in
    /// practice; 1 in the reference scenario).
    pub amp_inefficiency: f64,
    /// Per-user rate threshold `C` in b/s/Hz.
    pub rate_user: f64,
    /// Per-eavesdropper tolerated leakage threshold `C_e` in b/s/Hz.
    pub rate_eve: f64,
    /// Noise power at every receiver in watts.
    pub sigma2: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            n: 5,
            m: 20,
            j_r: 2,
            j_t: 2,
            eves_per_space: 1,
            p_max: 10.0,
            p_bs: 10.0,
            p_user: 0.01,
            p_elem: 0.01,
            amp_inefficiency: 1.0,
            rate_user: 1.5,
            rate_eve: 0.6,
            sigma2: 1e-11,
        }
    }
}

/// Rejected [`SystemParams`], [`Geometry`], or [`UncertaintyConfig`].
#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("dimension must be positive: {what}")]
    ZeroDim { what: &'static str },
    #[error("power must be positive and finite: {what} = {value}")]
    BadPower { what: &'static str, value: f64 },
    #[error(
        "user rate threshold {rate_user} must cover tolerated leakage {leakage} \
         (total eavesdroppers x per-eve threshold), or no positive secrecy target exists"
    )]
    SecrecyTargets { rate_user: f64, leakage: f64 },
    #[error("uncertainty coefficient must lie in [0, 1): {what} = {value}")]
    BadKappa { what: &'static str, value: f64 },
    #[error(
        "{cluster} cluster at y = {y} is on the wrong side of the surface plane (y = {surface_y})"
    )]
    WrongSide { cluster: &'static str, y: f64, surface_y: f64 },
    #[error("cluster radius must be positive and finite, got {0}")]
    BadRadius(f64),
}

impl SystemParams {
    /// Validate dimensions, powers, and the secrecy-target relation
    /// `C >= (total eavesdroppers) * C_e` — every signal leaks to the
    /// eavesdroppers of both spaces, so a weaker threshold pair would make
    /// the per-user secrecy floor negative and the optimizer's rate
    /// constraints vacuous.
    pub fn validate(&self) -> Result<(), ChannelError> {
        for (what, dim) in [
            ("antennas n", self.n),
            ("elements m", self.m),
            ("reflection users j_r", self.j_r),
            ("transmission users j_t", self.j_t),
            ("eves per space", self.eves_per_space),
        ] {
            if dim == 0 {
                return Err(ChannelError::ZeroDim { what });
            }
        }
        for (what, value) in [
            ("p_max", self.p_max),
            ("p_bs", self.p_bs),
            ("p_user", self.p_user),
            ("p_elem", self.p_elem),
            ("amp_inefficiency", self.amp_inefficiency),
            ("rate_user", self.rate_user),
            ("rate_eve", self.rate_eve),
            ("sigma2", self.sigma2),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ChannelError::BadPower { what, value });
            }
        }
        let leakage = (NUM_SPACES * self.eves_per_space) as f64 * self.rate_eve;
        if self.rate_user < leakage {
            return Err(ChannelError::SecrecyTargets { rate_user: self.rate_user, leakage });
        }
        Ok(())
    }

    /// Total user count `J = j_r + j_t`.
    #[inline]
    pub fn num_users(&self) -> usize {
        self.j_r + self.j_t
    }

    /// Users in space `k` (0 = reflection, 1 = transmission).
    #[inline]
    pub fn users_in(&self, k: usize) -> usize {
        if k == SPACE_R {
            self.j_r
        } else {
            self.j_t
        }
    }
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Node positions in metres. The surface sits in the x–z plane at `ris[1]`;
/// everything with smaller `y` (including the base station) is in the
/// reflection space, everything with larger `y` in the transmission space.
#[derive(Clone, Debug)]
pub struct Geometry {
    /// Base-station position.
    pub bs: [f64; 3],
    /// Surface centre position.
    pub ris: [f64; 3],
    /// Reflection-space user cluster centre.
    pub bob_r_center: [f64; 3],
    /// Reflection-space eavesdropper cluster centre.
    pub eve_r_center: [f64; 3],
    /// Transmission-space user cluster centre.
    pub bob_t_center: [f64; 3],
    /// Transmission-space eavesdropper cluster centre.
    pub eve_t_center: [f64; 3],
    /// Cluster radius: endpoints scatter uniformly in a horizontal disk.
    pub cluster_radius: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            bs: [0.0, 0.0, 10.0],
            ris: [0.0, 30.0, 20.0],
            bob_r_center: [0.0, 25.0, 0.0],
            eve_r_center: [25.0, 25.0, 0.0],
            bob_t_center: [0.0, 35.0, 0.0],
            eve_t_center: [25.0, 35.0, 0.0],
            cluster_radius: 4.0,
        }
    }
}

impl Geometry {
    /// Validate the side-of-surface invariants: the base station and every
    /// reflection-space cluster must sit at `y` below the surface plane,
    /// transmission-space clusters above it.
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.cluster_radius > 0.0 && self.cluster_radius.is_finite()) {
            return Err(ChannelError::BadRadius(self.cluster_radius));
        }
        let surface_y = self.ris[1];
        let margin = self.cluster_radius;
        let reflection = [
            ("base station", self.bs[1], 0.0),
            ("reflection users", self.bob_r_center[1], margin),
            ("reflection eavesdroppers", self.eve_r_center[1], margin),
        ];
        for (cluster, y, m) in reflection {
            if y + m >= surface_y {
                return Err(ChannelError::WrongSide { cluster, y, surface_y });
            }
        }
        let transmission = [
            ("transmission users", self.bob_t_center[1], margin),
            ("transmission eavesdroppers", self.eve_t_center[1], margin),
        ];
        for (cluster, y, m) in transmission {
            if y - m <= surface_y {
                return Err(ChannelError::WrongSide { cluster, y, surface_y });
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Uncertainty
// ---------------------------------------------------------------------------

/// Relative CSI-error radii: `xi = kappa_h ||h_hat||_2` for direct links and
/// `zeta = kappa_g ||G_hat||_F` for cascaded links.
///
/// The default corresponds to squared coefficients of 0.1.
#[derive(Clone, Copy, Debug)]
pub struct UncertaintyConfig {
    /// Direct-link coefficient, in `[0, 1)`.
    pub kappa_h: f64,
    /// Cascaded-link coefficient, in `[0, 1)`.
    pub kappa_g: f64,
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        Self { kappa_h: 0.1f64.sqrt(), kappa_g: 0.1f64.sqrt() }
    }
}

impl UncertaintyConfig {
    /// Perfect channel state information (zero radii).
    pub fn perfect() -> Self {
        Self { kappa_h: 0.0, kappa_g: 0.0 }
    }

    /// Both coefficients must lie in `[0, 1)`: at `kappa = 1` the error can
    /// cancel the whole estimate and every worst-case rate is zero.
    pub fn validate(&self) -> Result<(), ChannelError> {
        for (what, value) in [("kappa_h", self.kappa_h), ("kappa_g", self.kappa_g)] {
            if !(value >= 0.0 && value < 1.0 && value.is_finite()) {
                return Err(ChannelError::BadKappa { what, value });
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Realization
// ---------------------------------------------------------------------------

/// One endpoint's channel pair: estimated links, the drawn true error, and
/// the certified radii.
#[derive(Clone, Debug)]
pub struct Link {
    /// Estimated direct channel (length `N`).
    pub hhat: DVector<C64>,
    /// Estimated cascaded channel (size `M x N`).
    pub ghat: DMatrix<C64>,
    /// True-minus-estimated direct error, `||err_h|| <= xi`.
    pub err_h: DVector<C64>,
    /// True-minus-estimated cascaded error, `||err_g||_F <= zeta`.
    pub err_g: DMatrix<C64>,
    /// Direct-error radius.
    pub xi: f64,
    /// Cascaded-error radius.
    pub zeta: f64,
}

impl Link {
    /// True direct channel `h_hat + err_h`.
    pub fn h_true(&self) -> DVector<C64> {
        &self.hhat + &self.err_h
    }

    /// True cascaded channel `G_hat + err_g`.
    pub fn g_true(&self) -> DMatrix<C64> {
        &self.ghat + &self.err_g
    }
}

/// Deterministic draw of every link in the scene for one seed.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    /// Seed this realization was generated from.
    pub seed: u64,
    /// Estimated base-station-to-surface matrix (`M x N`).
    pub bs_ris: DMatrix<C64>,
    /// User links, indexed `[space][user]`; within each space users are
    /// sorted by descending estimated direct-link norm, fixing the
    /// successive-decoding order.
    pub bobs: Vec<Vec<Link>>,
    /// Eavesdropper links, indexed `[space][eve]`.
    pub eves: Vec<Vec<Link>>,
    /// Drawn user positions, same indexing as `bobs`.
    pub bob_positions: Vec<Vec<[f64; 3]>>,
    /// Drawn eavesdropper positions, same indexing as `eves`.
    pub eve_positions: Vec<Vec<[f64; 3]>>,
}

// ---------------------------------------------------------------------------
// Large-scale fading
// ---------------------------------------------------------------------------

/// Reference gain at 1 m: −30 dB.
pub const PATH_LOSS_REF_DB: f64 = -30.0;
/// Path-loss exponent of the base-station-to-surface link.
pub const EXP_BS_RIS: f64 = 2.2;
/// Path-loss exponent of direct base-station-to-endpoint links (users and
/// eavesdroppers alike).
pub const EXP_BS_USER: f64 = 3.2;
/// Path-loss exponent of surface-to-endpoint links.
pub const EXP_RIS_USER: f64 = 2.6;
/// Rician factor of surface-involved links: 3 dB.
pub const RICIAN_FACTOR_DB: f64 = 3.0;

/// Distance-based power gain `eps0 * d^(-alpha)` with `eps0 = -30 dB`.
///
/// # Example
///
/// ```
/// use star_see::channel::path_loss;
/// assert!((path_loss(1.0, 2.2) - 1e-3).abs() < 1e-18);
/// assert!((path_loss(10.0, 2.2) - 6.309573444801933e-6).abs() < 1e-15);
/// ```
#[inline]
pub fn path_loss(distance_m: f64, exponent: f64) -> f64 {
    debug_assert!(distance_m > 0.0, "path loss needs a positive distance");
    db_to_linear(PATH_LOSS_REF_DB) * distance_m.powf(-exponent)
}

#[inline]
fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[inline]
fn unit_dir(from: [f64; 3], to: [f64; 3]) -> [f64; 3] {
    let d = distance(from, to);
    [(to[0] - from[0]) / d, (to[1] - from[1]) / d, (to[2] - from[2]) / d]
}

// ---------------------------------------------------------------------------
// Array responses
// ---------------------------------------------------------------------------

/// Half-wavelength uniform linear array along the x-axis: element `k` has
/// phase `pi * k * dir_x` for a unit propagation direction `dir`.
pub fn ula_response(n: usize, dir: [f64; 3]) -> DVector<C64> {
    DVector::from_fn(n, |k, _| {
        C64::from_polar(1.0, std::f64::consts::PI * k as f64 * dir[0])
    })
}

/// Factor `m` into the most-square `(m_x, m_z)` grid with `m_x <= m_z`.
pub fn upa_grid(m: usize) -> (usize, usize) {
    let root = (m as f64).sqrt().floor() as usize;
    for d in (1..=root).rev() {
        if m % d == 0 {
            return (d, m / d);
        }
    }
    (1, m)
}

/// Half-wavelength uniform planar array in the x–z plane (the surface
/// orientation): element `(ix, iz)` has phase `pi (ix dir_x + iz dir_z)`,
/// flattened x-fastest.
pub fn upa_response(m: usize, dir: [f64; 3]) -> DVector<C64> {
    let (mx, _mz) = upa_grid(m);
    DVector::from_fn(m, |idx, _| {
        let ix = (idx % mx) as f64;
        let iz = (idx / mx) as f64;
        C64::from_polar(1.0, std::f64::consts::PI * (ix * dir[0] + iz * dir[2]))
    })
}

// ---------------------------------------------------------------------------
// Small-scale fading
// ---------------------------------------------------------------------------

fn cn01(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * std::f64::consts::FRAC_1_SQRT_2, im * std::f64::consts::FRAC_1_SQRT_2)
}

/// Rician mixture of a deterministic line-of-sight component (unit-modulus
/// entries) and an i.i.d. complex-normal scatter component, scaled to the
/// link's path gain.
fn rician_vector(
    rng: &mut ChaCha8Rng,
    los: &DVector<C64>,
    gain: f64,
    rician_linear: f64,
) -> DVector<C64> {
    let los_w = (rician_linear / (1.0 + rician_linear)).sqrt();
    let nlos_w = (1.0 / (1.0 + rician_linear)).sqrt();
    let scale = gain.sqrt();
    DVector::from_fn(los.len(), |i, _| scale * (los_w * los[i] + nlos_w * cn01(rng)))
}

fn rician_matrix(
    rng: &mut ChaCha8Rng,
    los: &DMatrix<C64>,
    gain: f64,
    rician_linear: f64,
) -> DMatrix<C64> {
    let los_w = (rician_linear / (1.0 + rician_linear)).sqrt();
    let nlos_w = (1.0 / (1.0 + rician_linear)).sqrt();
    let scale = gain.sqrt();
    // Column-major fill keeps the draw order independent of matrix shape
    // quirks: one fresh scatter sample per entry.
    DMatrix::from_fn(los.nrows(), los.ncols(), |i, j| {
        scale * (los_w * los[(i, j)] + nlos_w * cn01(rng))
    })
}

fn rayleigh_vector(rng: &mut ChaCha8Rng, n: usize, gain: f64) -> DVector<C64> {
    let scale = gain.sqrt();
    DVector::from_fn(n, |_, _| scale * cn01(rng))
}

// ---------------------------------------------------------------------------
// Cascaded links
// ---------------------------------------------------------------------------

/// Cascaded surface channel `G = diag(g^H) H_b`, the fixed part of the
/// surface-composed link: for any surface coefficient vector `u`, the
/// effective row seen through the surface is `u^H G = g^H diag(u^*) H_b`.
///
/// # Example
///
/// ```
/// use nalgebra::{DMatrix, DVector};
/// use num_complex::Complex64 as C64;
/// use star_see::channel::cascaded_channel;
///
/// let g = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
/// let hb = DMatrix::identity(2, 2);
/// let casc = cascaded_channel(&g, &hb);
/// assert_eq!(casc[(0, 0)], C64::new(1.0, 0.0));
/// assert_eq!(casc[(1, 1)], C64::new(0.0, -1.0)); // conj(i) = -i
/// ```
pub fn cascaded_channel(g: &DVector<C64>, h_b: &DMatrix<C64>) -> DMatrix<C64> {
    debug_assert_eq!(g.len(), h_b.nrows(), "surface-side vector must match H_b rows");
    let mut out = h_b.clone();
    for mrow in 0..h_b.nrows() {
        let c = g[mrow].conj();
        for col in 0..h_b.ncols() {
            out[(mrow, col)] *= c;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Bounded error sampling
// ---------------------------------------------------------------------------

/// Uniform draw from the closed complex ball `{ x in C^dim : ||x|| <= radius }`
/// (uniform with respect to Lebesgue measure on `R^(2 dim)`, so the expected
/// norm is `radius * 2 dim / (2 dim + 1)`).
pub fn sample_in_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> DVector<C64> {
    let dir = sample_on_sphere(rng, dim, 1.0);
    let u: f64 = rng.gen();
    dir * C64::new(radius * u.powf(1.0 / (2.0 * dim as f64)), 0.0)
}

/// Uniform draw from the sphere `||x|| = radius` in `C^dim`.
pub fn sample_on_sphere(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> DVector<C64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| cn01(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v * C64::new(radius / norm, 0.0);
        }
    }
}

/// Uniform draw from the Frobenius-norm ball of complex `rows x cols`
/// matrices.
pub fn sample_matrix_in_ball(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    radius: f64,
) -> DMatrix<C64> {
    let flat = sample_in_ball(rng, rows * cols, radius);
    DMatrix::from_fn(rows, cols, |i, j| flat[j * rows + i])
}

// ---------------------------------------------------------------------------
// Realization generation
// ---------------------------------------------------------------------------

fn disk_position(rng: &mut ChaCha8Rng, center: [f64; 3], radius: f64) -> [f64; 3] {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    [center[0] + r * theta.cos(), center[1] + r * theta.sin(), center[2]]
}

fn draw_link(
    rng: &mut ChaCha8Rng,
    params: &SystemParams,
    geom: &Geometry,
    bs_ris: &DMatrix<C64>,
    unc: &UncertaintyConfig,
    pos: [f64; 3],
) -> Link {
    let rician = db_to_linear(RICIAN_FACTOR_DB);

    // Direct link: pure scatter (no line of sight survives to ground level).
    let hhat = rayleigh_vector(rng, params.n, path_loss(distance(geom.bs, pos), EXP_BS_USER));

    // Surface-to-endpoint link: Rician around the planar-array response.
    let los = upa_response(params.m, unit_dir(geom.ris, pos));
    let g_vec =
        rician_vector(rng, &los, path_loss(distance(geom.ris, pos), EXP_RIS_USER), rician);
    let ghat = cascaded_channel(&g_vec, bs_ris);

    let xi = unc.kappa_h * hhat.norm();
    let zeta = unc.kappa_g * ghat.norm(); // nalgebra matrix norm = Frobenius
    let err_h = sample_in_ball(rng, params.n, xi);
    let err_g = sample_matrix_in_ball(rng, params.m, params.n, zeta);

    Link { hhat, ghat, err_h, err_g, xi, zeta }
}

/// Draw the full scene for one seed: positions, fading, cascaded links, error
/// radii, and one true-error realization inside each ball. Bit-identical for
/// identical inputs.
pub fn generate_realization(
    params: &SystemParams,
    geom: &Geometry,
    unc: &UncertaintyConfig,
    seed: u64,
) -> Result<ChannelRealization, ChannelError> {
    params.validate()?;
    geom.validate()?;
    unc.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rician = db_to_linear(RICIAN_FACTOR_DB);

    // Base-station-to-surface matrix: Rician around the outer product of the
    // two array responses.
    let a_ris = upa_response(params.m, unit_dir(geom.ris, geom.bs));
    let a_bs = ula_response(params.n, unit_dir(geom.bs, geom.ris));
    let los = &a_ris * a_bs.adjoint();
    let bs_ris = rician_matrix(
        &mut rng,
        &los,
        path_loss(distance(geom.bs, geom.ris), EXP_BS_RIS),
        rician,
    );

    let mut bobs = Vec::with_capacity(NUM_SPACES);
    let mut eves = Vec::with_capacity(NUM_SPACES);
    let mut bob_positions = Vec::with_capacity(NUM_SPACES);
    let mut eve_positions = Vec::with_capacity(NUM_SPACES);

    for space in 0..NUM_SPACES {
        let (bob_center, eve_center) = if space == SPACE_R {
            (geom.bob_r_center, geom.eve_r_center)
        } else {
            (geom.bob_t_center, geom.eve_t_center)
        };

        let mut space_bobs: Vec<(Link, [f64; 3])> = (0..params.users_in(space))
            .map(|_| {
                let pos = disk_position(&mut rng, bob_center, geom.cluster_radius);
                (draw_link(&mut rng, params, geom, &bs_ris, unc, pos), pos)
            })
            .collect();
        // Successive-decoding order: strongest estimated direct link first.
        space_bobs.sort_by(|a, b| {
            b.0.hhat.norm().partial_cmp(&a.0.hhat.norm()).expect("norms are finite")
        });
        let (links, positions): (Vec<_>, Vec<_>) = space_bobs.into_iter().unzip();
        bobs.push(links);
        bob_positions.push(positions);

        let (eve_links, eve_pos): (Vec<_>, Vec<_>) = (0..params.eves_per_space)
            .map(|_| {
                let pos = disk_position(&mut rng, eve_center, geom.cluster_radius);
                (draw_link(&mut rng, params, geom, &bs_ris, unc, pos), pos)
            })
            .unzip();
        eves.push(eve_links);
        eve_positions.push(eve_pos);
    }

    Ok(ChannelRealization { seed, bs_ris, bobs, eves, bob_positions, eve_positions })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
