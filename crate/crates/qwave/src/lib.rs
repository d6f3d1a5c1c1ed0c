//! Symbolic and numerical workbench for conditional symmetries of the
//! nonlinear wave equation in light-cone form, `u_yz = f(y,z,u)`.
//!
//! The crate generates the determining system for conditional invariance
//! under operators `Q = a d_y + b d_z + c d_u` restricted by the invariant
//! surface condition `Qu = 0`, verifies candidate operators, classifies the
//! canonical families, builds the reduction ansatz `u = sigma(y,z) *
//! phi(omega(y,z))` down to an ODE, and cross-validates every symbolic
//! result numerically (finite-difference residuals, fixed-step integration
//! of the reduced equation, characteristic curves).
//!
//! Modules:
//! - [`expr`]: expression kernel (parse, print, simplify, diff, substitute,
//!   zero test, numeric evaluation)
//! - [`jet`]: second-order jet space, total derivatives, prolongation,
//!   constraint elimination
//! - [`detsys`]: determining systems, operator verification, case
//!   classification, closed-form families
//! - [`reduction`]: characteristics, reduced ODE, reducibility
//! - [`numeric`]: grids, stencils, integrators
//! - [`report`]: structured verdicts shared by library and CLI
//! - [`session`]: declaration/definition files for the CLI
//!
//! ```
//! use qwave::detsys::{verify_conditional_operator, SystemForm, VerifyOptions};
//! use qwave::{parse, DeclTable};
//!
//! // The operator generated by T = y*z admits f = 1/(y+z): all four
//! // determining equations vanish identically.
//! let d = DeclTable::standard();
//! let report = verify_conditional_operator(
//!     Some(&parse("1/(y+z)", &d).unwrap()),
//!     &parse("z/y", &d).unwrap(),
//!     &parse("u/y", &d).unwrap(),
//!     SystemForm::ANonzero,
//!     &VerifyOptions::default(),
//! ).unwrap();
//! assert!(report.pass);
//! ```

pub mod detsys;
pub mod expr;
pub mod jet;
pub mod numeric;
pub mod reduction;
pub mod report;
pub mod session;

pub use expr::{parse, Bindings, DeclTable, Expr, FunctionSymbol, RatFunc};
