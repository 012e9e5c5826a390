pub mod exactnum;
pub mod padic;
pub mod tldiag;
pub mod projectors;
pub mod quiveralg;
pub mod repchar;
pub mod cache;
pub mod verify;

pub use exactnum::{FpScalar, NumError, PValuation, Rational};
pub use padic::{Direction, DigitSet, PadicContext, PadicError};
pub use projectors::{pjw, pqjw_closed, ProjError, ProjectorKey, ProjectorStore};
pub use quiveralg::{rewrite, NormalForm, QuiverError, QuiverWord};
pub use repchar::{CharError, Character, TiltingCharacter};
pub use tldiag::{FpMorphism, Matching, QMorphism, TlError};
pub use cache::{CacheError, DiskCache};
pub use verify::{Suite, VerifyConfig, VerifyError, VerifyReport};
