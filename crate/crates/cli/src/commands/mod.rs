pub mod build;
pub mod count_points;
pub mod goodness;
pub mod simulate;
