//! Two-phase graph-based trajectory planning for race vehicles.
//!
//! The crate splits the planning problem into an offline and an online part:
//!
//! * offline, a multilayer directed graph (the [`lattice::Lattice`]) is built
//!   over one full lap of a closed [`ref_line::ReferenceLine`], with cubic
//!   spline edges, admissibility filters and precomputed edge costs;
//! * online, a per-cycle [`planner`] windows the graph ahead of the vehicle,
//!   overlays obstacle blockings, searches one path per action primitive
//!   ("straight" / "left" / "right"), post-processes it into a curvature
//!   continuous spline chain and attaches a friction-limited
//!   [`velocity`] profile.
//!
//! The crate is `no_std`-compatible (`--no-default-features --features libm`);
//! file IO, the CLI and the scenario simulator live in the companion
//! `raceplan` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod collision;
pub mod lattice;
pub mod math;
pub mod planner;
pub mod ref_line;
pub mod spline;
pub mod velocity;

mod codec;

#[cfg(test)]
pub(crate) mod testutil;

pub use ref_line::{RefLinePoint, ReferenceLine};
pub use spline::{CubicSegment, Pose, SampledPath};

/// 64-bit FNV-1a over a byte slice; fingerprints the race-line file inside
/// serialized graphs.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    #[test]
    fn fnv1a64_known_values() {
        // Classic FNV-1a test vectors.
        assert_eq!(super::fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(super::fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(super::fnv1a64(b"foobar"), 0x85944171f73967e8);
    }
}
