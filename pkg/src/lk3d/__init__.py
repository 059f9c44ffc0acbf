"""lk3d: edge-keypoint aggregation, sector-based linear keypoint descriptors,
fast descriptor matching, and rigid registration for rotating LiDAR scans."""

from .bench import LatencyReport, run_latency_bench
from .config import PipelineConfig
from .descriptor import (
    Descriptor,
    DescriptorParams,
    PairTables,
    angle_between,
    build_tables,
    generate_descriptors,
    read_descriptors,
    sector_index,
    single_anchor_descriptor,
    write_descriptors,
    write_descriptors_csv,
)
from .extraction import (
    AggregationKeypoint,
    Cluster,
    EdgePoint,
    EdgePointSet,
    ExtractorParams,
    aggregate_keypoints,
    compute_smoothness,
    extract_edge_points,
    sector_of,
    write_keypoints,
)
from .matching import (
    MatcherParams,
    MatchPair,
    PointCorrespondence,
    expand_to_edge_matches,
    match,
    similarity_score,
    write_correspondences_csv,
    write_matches_csv,
)
from .registration import (
    DegenerateGeometryError,
    RegistrationResult,
    RigidPose,
    register_scans,
    rotation_about_z,
    rotation_error,
    solve_pose_svd,
    solve_rigid,
    trajectory_rmse,
    translation_error,
)
from .scan_io import (
    HDL64,
    VLP16,
    EmptyScanError,
    FormatError,
    LidarScan,
    SensorPreset,
    assign_rings,
    read_kitti_bin,
    read_pcd_ascii,
    read_scan,
    sensor_preset,
    write_scan,
)
from .synth import SceneSpec, generate_scene, transformed_pair

__version__ = "0.1.0"
