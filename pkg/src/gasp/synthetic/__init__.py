from .observers import (
    FixationFrame,
    ObserverModel,
    attraction_mixture,
    emit_detections,
    emit_sp_clip,
    expression_grid,
    fixation_map,
    gaussian_map,
    render_frame,
    simulate_fixations,
    sp_gray,
)
from .rng import stream
from .scene import PRESETS, Preset, SceneScript, gaze_angles, generate_scene, get_preset

__all__ = [
    "FixationFrame",
    "ObserverModel",
    "PRESETS",
    "Preset",
    "SceneScript",
    "attraction_mixture",
    "emit_detections",
    "emit_sp_clip",
    "expression_grid",
    "fixation_map",
    "gaussian_map",
    "gaze_angles",
    "generate_scene",
    "get_preset",
    "render_frame",
    "simulate_fixations",
    "sp_gray",
    "stream",
]
from .dataset import (
    SOCIAL,
    STACK_ORDER,
    Dataset,
    SceneData,
    build_dataset,
    build_scene,
    load_dataset,
    modality_clips,
    read_fixations_csv,
    save_dataset,
    scene_seeds,
)

__all__ += [
    "Dataset",
    "SOCIAL",
    "STACK_ORDER",
    "SceneData",
    "build_dataset",
    "build_scene",
    "load_dataset",
    "modality_clips",
    "read_fixations_csv",
    "save_dataset",
    "scene_seeds",
]
