//! Moving-camera support.
//!
//! Before a frame from a moving camera is processed, the carried model is
//! brought into the new frame's coordinates: basis and accumulator columns
//! are warped bilinearly, the residual mixtures by nearest neighbour, and the
//! pixels that entered the view are estimated from the new frame.

mod registration;
mod transform;
mod warp;

pub use registration::{estimate_affine, RegistrationConfig};
pub use transform::{parse_transforms, read_transforms, write_transforms, AffineTransform};
pub use warp::{align_frames, fill_missing, track_frame, warp_model, warp_plane, WarpReport};
