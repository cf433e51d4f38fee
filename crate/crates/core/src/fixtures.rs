//! Reference data shipped with the crate.

pub const CH2_LIE_TABLES: &str = include_str!("../fixtures/ch2_lie_tables.txt");
pub const CHN_LIE_TABLES: &str = include_str!("../fixtures/chn_lie_tables.txt");
pub const CH2_RAW_SYSTEM: &str = include_str!("../fixtures/ch2_raw.eqs");
pub const CH2_REDUCED_SYSTEM: &str = include_str!("../fixtures/ch2_reduced.eqs");
pub const CHN_SYSTEM: &str = include_str!("../fixtures/chn_system.eqs");
