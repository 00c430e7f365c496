//! Image-quality and route-level evaluation metrics.

mod quality;
mod route;

pub use quality::{psnr, ssim, Psnr, SSIM_SIGMA, SSIM_WINDOW};
pub use route::{
    aggregate, arrival_success, attribute_arrival_failure, evaluate_route, landmark_matching_rate,
    path_efficiency, route_modification_success, summarize_quality, ArrivalFailure, QualitySummary,
    RouteEvalAggregate, RouteEvalInput, RouteEvalReport,
};
