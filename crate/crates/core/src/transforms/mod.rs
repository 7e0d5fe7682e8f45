//! Instance-side reductions and the canonical lifts of assignments.

pub mod alphabet;
pub mod circuit;
pub mod degree;
pub mod expanderize;
pub mod fglss;
pub mod gadgets;
pub mod hadamard;
pub mod power;
pub mod serial;
pub mod sparsify;
pub mod tester;

pub use alphabet::{alphabet_reduce, edge_circuit, lift_alphabet, named_constraint_diff, AlphabetConfig, AlphabetMap};
pub use circuit::{Circuit, CircuitBuilder, Gate, Poly};
pub use degree::{degree_reduce, lift_degree, CloudMap};
pub use expanderize::expanderize;
pub use power::{lift_power, power, walk_bound, PowerInfo, PowerMode, POWER_STATE_CAP};
pub use sparsify::{lift_sparsify, sparsify, NamedBuilder};
pub use tester::{assignment_tester, exhaustive_violation, hadamard_tables, Family, TesterConfig, TesterLayout};
pub use fglss::{canonical_clique, cloud_edge_count, fglss, is_clique, max_clique, maximal_cliques, FglssLegend};
pub use gadgets::{e3sat_to_3lin, lift_e3sat, recover_e3sat, to_e3sat, E3SatEncoding};
pub use serial::{serial_repeat, SerialInfo};
