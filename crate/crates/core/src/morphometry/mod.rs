//! Instance-level characterization: connected components, per-grain shape
//! statistics, size distributions and growth kinetics.

mod components;
mod kinetics;
mod perimeter;
mod stats;

pub use components::connected_components;
pub use kinetics::{kinetics, KineticsTrajectory};
pub use perimeter::contour_length;
pub use stats::{grain_stats, size_distribution, write_stats_csv, GrainStats, SizeHistogram, STATS_CSV_HEADER};
