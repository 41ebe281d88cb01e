//! Evaluation statistics: paired t-tests, Cohen's d, exact binomial and
//! chi-square tests, and the ratings report built from them.

mod hypothesis;
mod ratings;
pub mod special;

pub use hypothesis::{
    chi_square_independence, cohens_d, exact_binomial_test, paired_t_test, significance_stars,
    EffectSize, TestResult,
};
pub use ratings::{
    analyze_ratings, analyze_records, parse_ratings, Dimension, DimensionRow, DomainTable,
    PreferenceRow, PreferenceTable, RatingsRecord, RatingsReport, RATINGS_HEADER,
};
