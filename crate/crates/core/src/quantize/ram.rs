//! Static RAM accounting for the device program.

use std::fmt;

use crate::chaos::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RamSizes {
    pub float_bytes: usize,
    pub int_bytes: usize,
}

impl Default for RamSizes {
    fn default() -> Self {
        Self {
            float_bytes: 4,
            int_bytes: 2,
        }
    }
}

/// Fixed costs that do not depend on the topology: the serial library,
/// scalar globals, and the reserve for function locals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RamOverheads {
    pub serial: usize,
    pub misc_globals: usize,
    pub stack_reserve: usize,
}

impl Default for RamOverheads {
    fn default() -> Self {
        Self {
            serial: 310,
            misc_globals: 6,
            stack_reserve: 1012,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RamBudget {
    pub input_buffer: usize,
    pub global_arrays: usize,
    pub serial: usize,
    pub library_w1: usize,
    pub library_w2: usize,
    pub library_coeffs: usize,
    pub library: usize,
    pub stack_reserve: usize,
    pub total: usize,
}

pub fn ram_budget(t: &Topology, sizes: RamSizes, overheads: RamOverheads) -> RamBudget {
    let input_buffer = (t.s + 1) * sizes.float_bytes;
    let global_arrays = (t.p + 1) * sizes.float_bytes + (t.m + 1) * sizes.float_bytes + overheads.misc_globals;
    let library_w1 = (t.p + 1) * (t.m + 1) * sizes.int_bytes;
    let library_w2 = (t.m + 1) * (t.n + 1) * sizes.int_bytes;
    let library_coeffs = 3 * t.p * sizes.int_bytes;
    let library = library_w1 + library_w2 + library_coeffs;
    RamBudget {
        input_buffer,
        global_arrays,
        serial: overheads.serial,
        library_w1,
        library_w2,
        library_coeffs,
        library,
        stack_reserve: overheads.stack_reserve,
        total: input_buffer + global_arrays + overheads.serial + library + overheads.stack_reserve,
    }
}

impl RamBudget {
    /// The top-level parts whose sum is `total`.
    pub fn parts(&self) -> [(&'static str, usize); 5] {
        [
            ("global variables", self.global_arrays),
            ("input array Y", self.input_buffer),
            ("serial library", self.serial),
            ("model library", self.library),
            ("local reserve", self.stack_reserve),
        ]
    }
}

impl fmt::Display for RamBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, bytes) in self.parts() {
            writeln!(f, "{name:<20} {bytes:>6} bytes")?;
            if name == "model library" {
                writeln!(f, "  {:<18} {:>6} bytes", "W1", self.library_w1)?;
                writeln!(f, "  {:<18} {:>6} bytes", "W2", self.library_w2)?;
                writeln!(f, "  {:<18} {:>6} bytes", "coefficients", self.library_coeffs)?;
            }
        }
        writeln!(f, "{:<20} {:>6} bytes", "total", self.total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn deployed_network_budget() {
        let b = ram_budget(&Topology::RBV, RamSizes::default(), RamOverheads::default());
        assert_eq!(b.input_buffer, 208);
        assert_eq!(b.global_arrays, 294);
        assert_eq!(b.library_w1, 2142);
        assert_eq!(b.library_w2, 84);
        assert_eq!(b.library_coeffs, 300);
        assert_eq!(b.library, 2526);
        assert_eq!(b.total, 4350);
        assert!(b.to_string().lines().last().unwrap().contains("4350 bytes"));
    }

    proptest! {
        #[test]
        fn total_is_sum_of_parts(s in 1usize..200, p in 1usize..200, m in 1usize..100, n in 1usize..10) {
            let b = ram_budget(&Topology { s, p, m, n }, RamSizes::default(), RamOverheads::default());
            prop_assert_eq!(b.total, b.parts().iter().map(|(_, v)| v).sum::<usize>());
            prop_assert_eq!(b.library, b.library_w1 + b.library_w2 + b.library_coeffs);
        }
    }
}
