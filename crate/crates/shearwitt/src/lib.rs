pub mod ring_base;
pub mod zmod_linalg;
pub mod witt;
pub mod sheared_witt;
pub mod frames;
pub mod frame_instances;
pub mod point_functors;
pub mod cli;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/witt.md")]
    mod witt {}
    #[doc = include_str!("../../../book/src/sheared.md")]
    mod sheared {}
    #[doc = include_str!("../../../book/src/windows.md")]
    mod windows {}
    #[doc = include_str!("../../../book/src/points.md")]
    mod points {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
