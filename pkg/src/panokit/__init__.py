"""Geometric and numerical toolkit for ERP panorama editing pipelines."""

__version__ = "0.1.0"

from .attention import AttentionMap, apply_modulation, modulate, modulation_residual
from .curriculum import MixSchedule, mix_probabilities, sample_stage
from .distortion import alpha_at, alpha_profile, distorted_noise, distortion_map, scale_factor
from .geometry import (
    BBox,
    CameraPose,
    backproject_to_erp,
    bbox_of_mask,
    cubemap_to_erp,
    direction_to_erp,
    erp_to_cubemap,
    erp_to_direction,
    project_to_perspective,
    sample_bilinear,
)
from .losses import (
    ObjectLayer,
    ShapeTarget,
    composite,
    extract_alpha_white_bg,
    loss_gradients,
    recon_loss,
    shape_loss_k,
    shape_target,
    soft_iou,
    total_shape_loss,
)
from .pairs import (
    EditTriplet,
    ReferenceObject,
    make_addition,
    make_modification,
    make_movement,
    make_removal,
    make_replacement,
    place_object,
    read_manifest,
    render_instruction,
    write_manifest,
)
from .seam import (
    EdgeBlindDenoiser,
    SeamConfig,
    ToyDenoiser,
    blend_boundary,
    cyclic_roll,
    extend_boundary,
    run_seam_inference,
    seam_discontinuity,
)
from .tokens import (
    ConditioningBundle,
    build_stage1_input,
    build_stage2_inputs,
    downsample_mask,
    rope3d_apply,
)
