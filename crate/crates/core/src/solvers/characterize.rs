//! De-embedding of short/open/load standards with multiline-TRL port terms.

use super::SolverError;
use crate::error_model::{correct_oneport, OnePortTerms};
use crate::standards::{fit_reflect_poly, ReflectFit, ReflectKind};
use crate::sparams::Network;

#[derive(Debug, Clone)]
pub struct Characterization {
    /// De-embedded (short, open, load) at the reference plane.
    pub definitions: [Network; 3],
    pub short_fit: ReflectFit,
    pub open_fit: ReflectFit,
    /// Tabulated load reflection.
    pub load_gamma: Network,
}

/// Corrects raw (short, open, load) reflections with `terms` and fits the
/// short and open polynomials. The load stays tabulated.
pub fn characterize_standards(terms: &OnePortTerms, raw: [&Network; 3]) -> Result<Characterization, SolverError> {
    let [short, open, load] = raw.map(|r| correct_oneport(terms, r));
    let (short, open, load) = (short?, open?, load?);
    let short_fit = fit_reflect_poly(ReflectKind::Short, &short)?;
    let open_fit = fit_reflect_poly(ReflectKind::Open, &open)?;
    Ok(Characterization { definitions: [short, open, load.clone()], short_fit, open_fit, load_gamma: load })
}
