//! Free groups of extended affine maps: words, generator construction and
//! growth certificates.

mod certificate;
mod generators;
mod word;

pub use certificate::{
    certify_growth, check_displacement, export_orbits, write_orbits_csv, Certificate, CertificateRow, CertifyConfig,
    DisplacementCheck, OrbitPoint, CERTIFICATE_LABEL,
};
pub use generators::{
    build_generators, estimate_mu, evaluate_word, letters, verify_hypotheses, word_data, word_map, BuildConfig,
    Generator, GeneratorJson, GeneratorSet, HistogramBin, HypothesisCheck, HypothesisReport, MuEstimate, PairDefect,
    WordData, H4_TOL,
};
pub use word::{
    cyclically_reduced_count, cyclically_reduced_words, enumerate, reduced_words, Letter, Word, MAX_LETTERS,
};
