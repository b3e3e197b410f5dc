//! Ingestion of grouped income counts and macro series, and assembly of the
//! model dataset in identification order.

pub mod fetch;
pub mod grouped;
pub mod macro_panel;
pub mod period;

pub use fetch::{fetch_remote_series, FetchOptions, RemoteSeries};
pub use grouped::{
    aggregate_monthly_to_quarterly, load_grouped_csv, CountLayout, Endpoints, GroupedIncomeSeries,
    GroupedSchema, DEFAULT_SAMPLE_SIZE,
};
pub use macro_panel::{
    assemble_dataset, default_transform, expand_biannual, load_macro_csv, Dataset, Instrument,
    MacroPanel, NamedSeries, Transform, TransformSpec, INEQUALITY_STATE,
};
pub use period::{Month, Period, Quarter};
