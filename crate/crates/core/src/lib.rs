//! Exact, machine-relative algorithmic information quantities.
//!
//! Every program of a small prefix-free machine up to a length cap is run
//! to a fuel horizon ([`enumerator`]). From the resulting store we read off
//! time-bounded Kolmogorov complexity and a priori probability ([`ait`]),
//! logical depth in both versions with depth curves and gaps ([`depth`]),
//! and the machine's Busy Beaver table ([`busybeaver`]). All probability
//! mass is exact dyadic arithmetic and every horizon-dependent result says
//! whether it is final.
//!
//! ```
//! use depthlab::{bits::bits, ait::KTable, enumerator::{Enumerator, FuelSchedule}};
//!
//! let (store, _) = Enumerator::new(9, FuelSchedule::powers_of_two(16)).enumerate().unwrap();
//! let table = KTable::build(&store);
//! let k = table.k_horizon(&bits("1"));
//! assert_eq!(k.k, Some(9));
//! assert_eq!(k.witness, Some(bits("110010011")));
//! ```

pub mod ait;
pub mod bits;
pub mod busybeaver;
pub mod codes;
pub mod depth;
pub mod dyadic;
pub mod enumerator;
mod error;
pub mod machine;
pub mod selfcheck;

pub use bits::BitString;
pub use dyadic::DyadicMass;
pub use error::{Error, Result};
