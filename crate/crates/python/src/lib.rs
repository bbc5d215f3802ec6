//! Python bindings: special functions, partial-knowledge closed forms, the
//! power comparison, and whole experiments driven by TOML text.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use noma_tradeoff::channel::{noise_power, UserProfile};
use noma_tradeoff::experiment::{self, ExperimentConfig};

fn err(e: noma_tradeoff::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn profiles(d_own: f64, d_other: f64, psd_dbm_hz: f64, bandwidth_hz: f64) -> PyResult<(UserProfile, UserProfile)> {
    let s2 = noise_power(psd_dbm_hz, bandwidth_hz).map_err(err)?;
    Ok((
        UserProfile::from_distance(d_own, s2).map_err(err)?,
        UserProfile::from_distance(d_other, s2).map_err(err)?,
    ))
}

#[pymodule]
mod noma_tradeoff_py {
    use super::*;

    #[pyfunction]
    fn pathloss_db(distance_km: f64) -> PyResult<f64> {
        noma_tradeoff::channel::pathloss_db(distance_km).map_err(err)
    }

    #[pyfunction]
    fn expint_e1(x: f64) -> PyResult<f64> {
        noma_tradeoff::special::expint_e1(x).map_err(err)
    }

    #[pyfunction]
    fn f_kernel(x: f64) -> PyResult<f64> {
        noma_tradeoff::special::f_kernel(x).map_err(err)
    }

    /// Ergodic NOMA rate of the user at `d_own` km.
    #[pyfunction]
    #[pyo3(signature = (d_own, d_other, ps, pw, psd_dbm_hz=-169.0, bandwidth_hz=1e7))]
    fn ergodic_rate_noma_partial(
        d_own: f64,
        d_other: f64,
        ps: f64,
        pw: f64,
        psd_dbm_hz: f64,
        bandwidth_hz: f64,
    ) -> PyResult<f64> {
        let (a, b) = profiles(d_own, d_other, psd_dbm_hz, bandwidth_hz)?;
        noma_tradeoff::partial::ergodic_rate_noma_partial(&a, &b, ps, pw).map_err(err)
    }

    /// Outage probability of the NOMA user at `d_own` km.
    #[pyfunction]
    #[pyo3(signature = (d_own, d_other, ps, pw, r_own, r_other, psd_dbm_hz=-169.0, bandwidth_hz=1e7))]
    #[allow(clippy::too_many_arguments)]
    fn outage_noma_partial(
        d_own: f64,
        d_other: f64,
        ps: f64,
        pw: f64,
        r_own: f64,
        r_other: f64,
        psd_dbm_hz: f64,
        bandwidth_hz: f64,
    ) -> PyResult<f64> {
        let (a, b) = profiles(d_own, d_other, psd_dbm_hz, bandwidth_hz)?;
        noma_tradeoff::partial::outage_noma_partial(&a, &b, ps, pw, r_own, r_other).map_err(err)
    }

    /// `(orthogonal power, superposition power)` for gains in descending order.
    #[pyfunction]
    #[pyo3(signature = (gains, targets, tol=1e-9))]
    fn lemma41_power_gap(gains: Vec<f64>, targets: Vec<f64>, tol: f64) -> PyResult<(f64, f64)> {
        noma_tradeoff::dlt::lemma41_power_gap(&gains, &targets, tol).map_err(err)
    }

    /// Runs the sweep described by TOML text and returns the CSV.
    #[pyfunction]
    fn run_experiment(config_toml: &str) -> PyResult<String> {
        let cfg = ExperimentConfig::from_toml_str(config_toml).map_err(err)?;
        let curves = experiment::run_experiment(&cfg).map_err(err)?;
        let mut buf = vec![];
        experiment::write_curves_csv(&curves, &mut buf).map_err(err)?;
        String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Closed-form versus Monte Carlo report as JSON text.
    #[pyfunction]
    fn validate_partial_csit(config_toml: &str) -> PyResult<String> {
        let cfg = ExperimentConfig::from_toml_str(config_toml).map_err(err)?;
        experiment::validate_partial_csit(&cfg)
            .and_then(|r| r.to_json())
            .map_err(err)
    }

    /// Feasibility frontier as a list of `(scheme, quantity, value)`.
    #[pyfunction]
    fn feasibility_frontier(config_toml: &str) -> PyResult<Vec<(String, String, f64)>> {
        let cfg = ExperimentConfig::from_toml_str(config_toml).map_err(err)?;
        Ok(experiment::feasibility_frontier(&cfg)
            .map_err(err)?
            .into_iter()
            .map(|f| (f.scheme.label().to_string(), f.quantity.to_string(), f.value))
            .collect())
    }
}
