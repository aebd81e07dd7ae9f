use super::SweepRecord;

/// Relative tolerance of the endpoint limits.
pub const LIMIT_TOL: f64 = 0.05;
/// Tolerance of each near-crossing mass identity.
pub const IDENTITY_TOL: f64 = 0.2;

/// Endpoints of one `κ` sweep against their limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointCheck {
    pub epsilon: f64,
    pub kappa_lo: f64,
    /// `|λ₁ − λ₀(C)|/λ₀(C)` at `κ_lo`.
    pub rel_lo: f64,
    /// Cusp mass of `u₁` at `κ_lo`.
    pub cusp_mass_lo: f64,
    pub kappa_hi: f64,
    /// `|λ₁ − λ₁(Σ)|/λ₁(Σ)` at `κ_hi`.
    pub rel_hi: f64,
    pub cusp_mass_hi: f64,
}

impl EndpointCheck {
    pub fn new(records: &[SweepRecord]) -> Option<Self> {
        let (lo, hi) = (records.first()?, records.last()?);
        Some(Self {
            epsilon: lo.epsilon,
            kappa_lo: lo.kappa,
            rel_lo: (lo.lambda1 - lo.lambda0_cusp).abs() / lo.lambda0_cusp,
            cusp_mass_lo: lo.cusp_mass1,
            kappa_hi: hi.kappa,
            rel_hi: (hi.lambda1 - hi.lambda1_base).abs() / hi.lambda1_base,
            cusp_mass_hi: hi.cusp_mass1,
        })
    }

    /// Both limits within 5%, cusp mass `≥ 0.9` at `κ_lo` and `≤ 0.1` at `κ_hi`.
    pub fn holds(&self) -> bool {
        self.rel_lo <= LIMIT_TOL && self.rel_hi <= LIMIT_TOL && self.cusp_mass_lo >= 0.9 && self.cusp_mass_hi <= 0.1
    }
}

/// Spectral checks over sweeps at several `ε` (descending).
#[derive(Clone, Debug, PartialEq)]
pub struct LimitReport {
    pub endpoints: Vec<EndpointCheck>,
    /// Largest `λ₁ − λ₀(C)` over all grid points (`≤ 0` expected).
    pub worst_upper_excess: f64,
    /// Smallest `λ₂ − λ₁` over all grid points and over interaction-regime points.
    pub min_gap: f64,
    pub min_gap_interaction: Option<f64>,
    pub interaction_points: usize,
    /// Both endpoint errors shrink with `ε`.
    pub improving: bool,
    /// Least-squares `C` in `cusp mass at κ_hi ≈ C ε log(1/ε)`.
    pub log_bound_constant: f64,
}

impl LimitReport {
    pub fn new(sweeps: &[Vec<SweepRecord>]) -> Self {
        let endpoints: Vec<EndpointCheck> = sweeps.iter().filter_map(|s| EndpointCheck::new(s)).collect();
        let all = || sweeps.iter().flatten();
        let worst_upper_excess = all().map(|r| r.lambda1 - r.lambda0_cusp).fold(f64::NEG_INFINITY, f64::max);
        let min_gap = all().map(|r| r.lambda2 - r.lambda1).fold(f64::INFINITY, f64::min);
        let regime: Vec<f64> = all().filter(|r| r.interaction).map(|r| r.lambda2 - r.lambda1).collect();
        let improving = endpoints.windows(2).all(|w| w[1].rel_lo < w[0].rel_lo && w[1].rel_hi < w[0].rel_hi);
        let (sxy, sxx) = endpoints.iter().fold((0.0, 0.0), |(sxy, sxx), e| {
            let x = e.epsilon * (1.0 / e.epsilon).ln();
            (sxy + x * e.cusp_mass_hi, sxx + x * x)
        });
        Self {
            endpoints,
            worst_upper_excess,
            min_gap,
            min_gap_interaction: regime.iter().copied().reduce(f64::min),
            interaction_points: regime.len(),
            improving,
            log_bound_constant: if sxx > 0.0 { sxy / sxx } else { f64::NAN },
        }
    }
}

/// The four near-crossing identities at one record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecompositionIdentities {
    pub kappa: f64,
    /// `min(m₁² + n₁², m₂² + n₂²)`.
    pub min_norm_sq: f64,
    /// `|m₁n₁ + m₂n₂|`, `|m₁ − n₂|`, `|m₂ + n₁|`.
    pub cross: f64,
    pub diff_m1_n2: f64,
    pub diff_m2_n1: f64,
}

impl DecompositionIdentities {
    pub fn new(r: &SweepRecord) -> Option<Self> {
        let m = r.masses?;
        Some(Self {
            kappa: r.kappa,
            min_norm_sq: (m.m1 * m.m1 + m.n1 * m.n1).min(m.m2 * m.m2 + m.n2 * m.n2),
            cross: (m.m1 * m.n1 + m.m2 * m.n2).abs(),
            diff_m1_n2: (m.m1 - m.n2).abs(),
            diff_m2_n1: (m.m2 + m.n1).abs(),
        })
    }

    pub fn holds(&self) -> bool {
        self.min_norm_sq >= 1.0 - IDENTITY_TOL && self.cross <= IDENTITY_TOL && self.diff_m1_n2 <= IDENTITY_TOL && self.diff_m2_n1 <= IDENTITY_TOL
    }
}
