//! Non-adaptive comparison methods: RSS fingerprinting with wKNN matching and
//! a dense network fed by a fixed (random or learned) sensing schedule.

mod fingerprint;
mod fixed;

pub use fingerprint::{build_fingerprint_db, fingerprint_squared_errors, wknn_locate, FingerprintDB};
pub use fixed::{train_fixed_dnn, FixedDnn, FixedSensingSchedule, FIXED_DNN_HIDDEN};
