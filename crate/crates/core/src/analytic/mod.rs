//! Closed forms valid at large field and exchange.
//!
//! * [`pca`]: pair-correlation approximation of the Hahn echo, mapping each
//!   nuclear flip-flop to an independent pseudospin;
//! * [`fid`]: Gaussian free induction decay from the Overhauser-field spread;
//! * [`fieldmap`]: secular hyperfine field `A_1zz + A_2zz` and its gradient;
//! * [`pairstats`]: which flip-flop pairs actually cause decoherence.

pub mod fid;
pub mod fieldmap;
pub mod pairstats;
pub mod pca;

pub use fid::{fid_analytic_series, fid_secular_series, fid_sigma_t2star};
pub use fieldmap::{field_maps, hyperfine_zz_gradient, FieldMapGrid, FieldMapPoint, Plane};
pub use pairstats::{histogram_csv, pair_statistics, PairMeasure, PairRecord, PairStatistics};
pub use pca::{
    pair_decoherence_fk, pair_decoherence_gk, pca_from_excitations, pca_hahn_coherences, pseudospin_fields, sample_initial_state,
    NuclearProductState, PseudospinExcitation, DEFAULT_COUPLING_FLOOR,
};
