//! Panel ingestion, transforms and instrument construction.

pub mod instruments;
pub mod load;
pub mod panel;
pub mod synthetic;
pub mod transform;

pub use instruments::{add_real_rate, build_instruments, InstrumentSpec, Instruments};
pub use load::{load_panel, read_panel, LoadedPanel, PanelSchema};
pub use panel::{Period, TimeSeriesPanel};
pub use transform::{apply_transforms, Transform, TransformSpec};
pub use synthetic::packaged_panel;
