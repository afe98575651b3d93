//! File formats, fixtures, exact-rational verification and the external
//! solver client for the gammahull CLI.

pub mod external;
pub mod formats;
pub mod rational;

pub use formats::{
    load_certificate, load_moment_fixture, load_problem, save_certificate, CertificateFile,
    FormatError, MomentFixture, ProblemFile,
};
