//! ROOPL++ toolchain: parsing, class analysis, type checking, program
//! inversion and a direction-aware interpreter running on a simulated
//! word-addressed memory managed by a reversible buddy allocator.

pub mod classes;
pub mod heap;
pub mod inverter;
pub mod machine;
pub mod syntax;
pub mod typing;

pub use classes::{build_class_map, ClassError, ClassMap};
pub use heap::{HeapConfig, HeapError, MemoryImage, WordWidth};
pub use inverter::{invert_program, invert_stmt};
pub use machine::{Direction, Machine, MachineConfig, RunOutput, RuntimeError, RuntimeErrorKind};
pub use syntax::{parse, pretty_print, Program, SyntaxError};
pub use typing::{check_program, TypeError, TypeErrorKind};
