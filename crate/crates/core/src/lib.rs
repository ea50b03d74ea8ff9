//! Construction, classification and verification of totally umbilic surfaces
//! in S²×R, H²×R, Sol and the fibrations M³(κ,τ).

pub mod conformal;
pub mod geometry;
pub mod ode;
pub mod profile;
pub mod roots;
pub mod special;
pub mod surface;
pub mod verify;
