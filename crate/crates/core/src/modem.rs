//! M-PSK error rates over AWGN.
//!
//! Closed forms are used for the curves and threshold search; a symbol-level
//! Monte Carlo provides an independent estimate of the same quantity.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Modulation order of the data link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModOrder {
    Bpsk,
    Qpsk,
    Psk8,
    Psk16,
    Psk32,
    Psk64,
}

impl ModOrder {
    /// Every order, ascending.
    pub const ALL: [ModOrder; 6] = [
        ModOrder::Bpsk,
        ModOrder::Qpsk,
        ModOrder::Psk8,
        ModOrder::Psk16,
        ModOrder::Psk32,
        ModOrder::Psk64,
    ];

    /// Symbol alphabet size.
    pub fn m(self) -> u32 {
        1 << self.bits_per_symbol()
    }

    pub fn bits_per_symbol(self) -> u32 {
        match self {
            ModOrder::Bpsk => 1,
            ModOrder::Qpsk => 2,
            ModOrder::Psk8 => 3,
            ModOrder::Psk16 => 4,
            ModOrder::Psk32 => 5,
            ModOrder::Psk64 => 6,
        }
    }

    pub fn from_m(m: u32) -> Result<Self> {
        ModOrder::ALL
            .into_iter()
            .find(|o| o.m() == m)
            .ok_or_else(|| Error::invalid("m", format!("{m} is not one of 2, 4, 8, 16, 32, 64")))
    }

    pub fn name(self) -> &'static str {
        match self {
            ModOrder::Bpsk => "BPSK",
            ModOrder::Qpsk => "QPSK",
            ModOrder::Psk8 => "8-PSK",
            ModOrder::Psk16 => "16-PSK",
            ModOrder::Psk32 => "32-PSK",
            ModOrder::Psk64 => "64-PSK",
        }
    }

    /// Next order down, `None` for BPSK.
    pub fn lower(self) -> Option<ModOrder> {
        let i = self as usize;
        (i > 0).then(|| ModOrder::ALL[i - 1])
    }
}

impl fmt::Display for ModOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModOrder {
    type Err = Error;

    /// Accepts `BPSK`, `QPSK`, `8-PSK`, `8psk`, `psk8` or a bare `8`, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .collect();
        let m = match key.as_str() {
            "bpsk" | "2psk" | "psk2" | "2" => 2,
            "qpsk" | "4psk" | "psk4" | "4" => 4,
            other => other
                .trim_end_matches("psk")
                .trim_start_matches("psk")
                .parse::<u32>()
                .map_err(|_| Error::invalid("modulation", format!("unknown modulation `{s}`")))?,
        };
        ModOrder::from_m(m)
    }
}

impl TryFrom<String> for ModOrder {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModOrder> for String {
    fn from(m: ModOrder) -> String {
        m.name().to_owned()
    }
}

/// Binary-reflected Gray label of phase index `i`.
#[inline]
pub fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

/// Upper tail of the standard normal, `Q(x) = erfc(x/√2)/2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Closed-form bit error rate at `ebn0_db` (Eb/N0 in dB).
///
/// BPSK and QPSK use the exact coherent result. Higher orders use the
/// nearest-neighbour symbol error approximation divided by the bits per
/// symbol, which assumes Gray labelling.
pub fn theoretical_ber(modulation: ModOrder, ebn0_db: f64) -> f64 {
    let gamma_b = db_to_linear(ebn0_db);
    let ber = match modulation {
        ModOrder::Bpsk | ModOrder::Qpsk => q_function((2.0 * gamma_b).sqrt()),
        _ => {
            let k = f64::from(modulation.bits_per_symbol());
            let gamma_s = gamma_b * k;
            let ser =
                2.0 * q_function((2.0 * gamma_s).sqrt() * (PI / f64::from(modulation.m())).sin());
            ser / k
        }
    };
    ber.clamp(0.0, 0.5)
}

/// Result of a Monte Carlo BER run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub ber: f64,
    /// Binomial standard error `sqrt(p(1-p)/n)`.
    pub std_err: f64,
    pub n_bits: u64,
    pub bit_errors: u64,
}

impl BerEstimate {
    fn from_counts(bit_errors: u64, n_bits: u64) -> Self {
        let ber = bit_errors as f64 / n_bits as f64;
        BerEstimate {
            ber,
            std_err: (ber * (1.0 - ber) / n_bits as f64).sqrt(),
            n_bits,
            bit_errors,
        }
    }
}

pub const MIN_MC_SYMBOLS: u64 = 1000;

/// Phase index of the constellation point closest to `(re, im)`.
///
/// For points on the unit circle the minimum Euclidean distance decision is
/// the nearest phase sector.
#[inline]
pub fn detect(re: f64, im: f64, m: u32) -> u32 {
    let sector = TAU / f64::from(m);
    let idx = (im.atan2(re) / sector).round() as i64;
    idx.rem_euclid(i64::from(m)) as u32
}

fn count_bit_errors(
    modulation: ModOrder,
    ebn0_db: f64,
    n_symbols: u64,
    rng: &mut rng::SimRng,
) -> u64 {
    let m = modulation.m();
    let k = modulation.bits_per_symbol();
    let es_n0 = db_to_linear(ebn0_db) * f64::from(k);
    // Unit-energy symbols, so per-dimension noise variance is N0/2 = 1/(2 Es/N0).
    let sigma = (0.5 / es_n0).sqrt();
    let sector = TAU / f64::from(m);
    let mask = u64::from(m - 1);

    let mut errors = 0u64;
    let mut bits = 0u64;
    let mut avail = 0u32;
    for _ in 0..n_symbols {
        if avail < k {
            bits = rand::RngCore::next_u64(rng);
            avail = 64;
        }
        let tx = (bits & mask) as u32;
        bits >>= k;
        avail -= k;

        let (s, c) = (sector * f64::from(tx)).sin_cos();
        let (nr, ni) = rng::normal_pair(rng);
        let rx = detect(c + sigma * nr, s + sigma * ni, m);
        errors += u64::from((gray(tx) ^ gray(rx)).count_ones());
    }
    errors
}

fn check_symbols(n_symbols: u64) -> Result<()> {
    if n_symbols < MIN_MC_SYMBOLS {
        return Err(Error::TooFewSymbols {
            min: MIN_MC_SYMBOLS,
            got: n_symbols,
        });
    }
    Ok(())
}

/// Symbol-level Monte Carlo BER of Gray-mapped M-PSK over AWGN.
///
/// Deterministic for a given `seed`.
pub fn monte_carlo_ber(
    modulation: ModOrder,
    ebn0_db: f64,
    n_symbols: u64,
    seed: u64,
) -> Result<BerEstimate> {
    check_symbols(n_symbols)?;
    let mut rng = rng::stream(seed, 0);
    let errors = count_bit_errors(modulation, ebn0_db, n_symbols, &mut rng);
    Ok(BerEstimate::from_counts(
        errors,
        n_symbols * u64::from(modulation.bits_per_symbol()),
    ))
}

/// Monte Carlo split across `workers` threads.
///
/// Worker `i` draws from sub-stream `i + 1` of `seed` and error counts are
/// summed, so the result depends on `(seed, workers)` but not on scheduling.
/// It is a different (equally valid) sample than [`monte_carlo_ber`].
pub fn monte_carlo_ber_split(
    modulation: ModOrder,
    ebn0_db: f64,
    n_symbols: u64,
    seed: u64,
    workers: usize,
) -> Result<BerEstimate> {
    check_symbols(n_symbols)?;
    let workers = workers.max(1) as u64;
    if workers == 1 {
        return monte_carlo_ber(modulation, ebn0_db, n_symbols, seed);
    }
    let errors: u64 = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let share = n_symbols / workers + u64::from(w < n_symbols % workers);
                scope.spawn(move || {
                    let mut rng = rng::stream(seed, w + 1);
                    count_bit_errors(modulation, ebn0_db, share, &mut rng)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("Monte Carlo worker panicked"))
            .sum()
    });
    Ok(BerEstimate::from_counts(
        errors,
        n_symbols * u64::from(modulation.bits_per_symbol()),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub modulation: ModOrder,
    pub snr_db: f64,
    pub ber: f64,
}

/// Closed-form BER over an Eb/N0 grid, ordered by (modulation, snr).
pub fn ber_curve(mods: &[ModOrder], snr_grid_db: &[f64]) -> Result<Vec<BerPoint>> {
    if snr_grid_db.is_empty()
        || snr_grid_db.iter().any(|s| !s.is_finite())
        || snr_grid_db.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::BadGrid);
    }
    Ok(mods
        .iter()
        .flat_map(|&modulation| {
            snr_grid_db.iter().map(move |&snr_db| BerPoint {
                modulation,
                snr_db,
                ber: theoretical_ber(modulation, snr_db),
            })
        })
        .collect())
}

/// Search bracket for threshold crossings, in dB of Eb/N0.
pub const THRESHOLD_BRACKET_DB: (f64, f64) = (-10.0, 60.0);
pub const THRESHOLD_TOL_DB: f64 = 0.01;

/// Lowest Eb/N0 (within [`THRESHOLD_TOL_DB`]) at which `modulation` meets `ber_threshold`.
///
/// Clamps to the bracket's lower edge when the target is already met there.
pub fn snr_threshold(modulation: ModOrder, ber_threshold: f64) -> Result<f64> {
    if !(ber_threshold > 0.0 && ber_threshold < 0.5) {
        return Err(Error::ThresholdOutOfRange(ber_threshold));
    }
    let (mut lo, mut hi) = THRESHOLD_BRACKET_DB;
    if theoretical_ber(modulation, lo) <= ber_threshold {
        return Ok(lo);
    }
    if theoretical_ber(modulation, hi) > ber_threshold {
        return Err(Error::NoCrossing {
            modulation,
            threshold: ber_threshold,
        });
    }
    // Invariant: ber(lo) > threshold >= ber(hi).
    while hi - lo > THRESHOLD_TOL_DB {
        let mid = 0.5 * (lo + hi);
        if theoretical_ber(modulation, mid) > ber_threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Operating range of one modulation: `[low_db, high_db)`, unbounded above when `high_db` is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrRange {
    pub modulation: ModOrder,
    pub low_db: f64,
    pub high_db: Option<f64>,
}

impl SnrRange {
    pub fn contains(&self, snr_db: f64) -> bool {
        snr_db >= self.low_db && self.high_db.is_none_or(|h| snr_db < h)
    }
}

/// Contiguous SNR ranges, one per modulation, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SnrTableDoc", into = "SnrTableDoc")]
pub struct SnrRangeTable {
    entries: Vec<SnrRange>,
    ber_threshold: f64,
}

impl SnrRangeTable {
    /// Builds a table from per-modulation lower edges. Each range ends where the next begins.
    pub fn from_lower_edges(ber_threshold: f64, edges: &[(ModOrder, f64)]) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::invalid(
                "snr_table",
                "at least one modulation is required",
            ));
        }
        if edges.iter().any(|e| !e.1.is_finite()) {
            return Err(Error::invalid("snr_table", "edges must be finite"));
        }
        for w in edges.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid(
                    "snr_table",
                    "modulations must be strictly ascending",
                ));
            }
            if w[1].1 <= w[0].1 {
                return Err(Error::invalid(
                    "snr_table",
                    format!("lower edge of {} must exceed that of {}", w[1].0, w[0].0),
                ));
            }
        }
        let entries = edges
            .iter()
            .enumerate()
            .map(|(i, &(modulation, low_db))| SnrRange {
                modulation,
                low_db,
                high_db: edges.get(i + 1).map(|e| e.1),
            })
            .collect();
        Ok(SnrRangeTable {
            entries,
            ber_threshold,
        })
    }

    /// The published operating ranges for a 1e-4 BER target.
    pub fn reference() -> Self {
        Self::from_lower_edges(
            1e-4,
            &[
                (ModOrder::Qpsk, 8.0),
                (ModOrder::Psk8, 12.0),
                (ModOrder::Psk16, 16.0),
                (ModOrder::Psk32, 22.0),
                (ModOrder::Psk64, 27.0),
            ],
        )
        .expect("reference table is well formed")
    }

    pub fn entries(&self) -> &[SnrRange] {
        &self.entries
    }

    pub fn ber_threshold(&self) -> f64 {
        self.ber_threshold
    }

    pub fn get(&self, modulation: ModOrder) -> Option<&SnrRange> {
        self.entries.iter().find(|e| e.modulation == modulation)
    }
}

impl Default for SnrRangeTable {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnrTableDoc {
    ber_threshold: f64,
    /// `[modulation, lower edge dB]` pairs.
    lower_edges: Vec<(ModOrder, f64)>,
}

impl TryFrom<SnrTableDoc> for SnrRangeTable {
    type Error = Error;
    fn try_from(doc: SnrTableDoc) -> Result<Self> {
        SnrRangeTable::from_lower_edges(doc.ber_threshold, &doc.lower_edges)
    }
}

impl From<SnrRangeTable> for SnrTableDoc {
    fn from(t: SnrRangeTable) -> Self {
        SnrTableDoc {
            ber_threshold: t.ber_threshold,
            lower_edges: t.entries.iter().map(|e| (e.modulation, e.low_db)).collect(),
        }
    }
}

/// Computes operating ranges for `mods` from a BER target.
///
/// Each modulation's lower edge is its own threshold crossing; the upper edge
/// is the next modulation's. An order whose threshold is not below the next
/// one's is dominated (the higher order meets the target at the same SNR) and
/// is left out of the table, e.g. BPSK next to QPSK.
pub fn derive_snr_ranges(ber_threshold: f64, mods: &[ModOrder]) -> Result<SnrRangeTable> {
    if !(ber_threshold > 0.0 && ber_threshold < 0.5) {
        return Err(Error::ThresholdOutOfRange(ber_threshold));
    }
    if mods.is_empty() {
        return Err(Error::invalid(
            "mods",
            "at least one modulation is required",
        ));
    }
    if mods.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("mods", "must be strictly ascending"));
    }
    let thresholds = mods
        .iter()
        .map(|&m| snr_threshold(m, ber_threshold).map(|t| (m, t)))
        .collect::<Result<Vec<_>>>()?;

    let mut edges: Vec<(ModOrder, f64)> = Vec::with_capacity(thresholds.len());
    for (m, t) in thresholds {
        while edges.last().is_some_and(|&(_, prev)| prev >= t) {
            edges.pop();
        }
        edges.push((m, t));
    }
    SnrRangeTable::from_lower_edges(ber_threshold, &edges)
}
