use crate::modem::ModOrder;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A named input violated its documented domain.
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("Monte Carlo run needs at least {min} symbols, got {got}")]
    TooFewSymbols { min: u64, got: u64 },

    #[error("SNR grid must be non-empty and strictly increasing")]
    BadGrid,

    #[error("BER threshold {0} outside (0, 0.5)")]
    ThresholdOutOfRange(f64),

    #[error("{modulation} never reaches BER {threshold} inside the search bracket")]
    NoCrossing {
        modulation: ModOrder,
        threshold: f64,
    },

    #[error("{modulation} needs {needed_db:.2} dB of gain, above the {max_db:.2} dB maximum")]
    GainInfeasible {
        modulation: ModOrder,
        needed_db: f64,
        max_db: f64,
    },

    #[error("{0} is not listed in the SNR range table")]
    NotInTable(ModOrder),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Rejects non-finite or out-of-interval values with the field name attached.
pub(crate) fn check_range(field: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if !value.is_finite() || value < lo || value > hi {
        return Err(Error::invalid(
            field,
            format!("{value} not in [{lo}, {hi}]"),
        ));
    }
    Ok(())
}

pub(crate) fn check_positive(field: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::invalid(field, format!("{value} must be positive")));
    }
    Ok(())
}

pub(crate) fn check_non_negative(field: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::invalid(
            field,
            format!("{value} must be non-negative"),
        ));
    }
    Ok(())
}
