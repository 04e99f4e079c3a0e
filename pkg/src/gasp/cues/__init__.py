from .colormap import decode_ppm, encode_ppm, hann, hanning2d, jet_colormap, minmax, write_ppm
from .records import DetectionRecord, FaceDetection, read_jsonl, write_jsonl
from .render import (
    cone_gray,
    cone_layer,
    fer_gray,
    gaze_direction,
    gf_gray,
    render_cone_map,
    render_fer_map,
    render_gf_map,
)
from .transforms import MODALITIES, ModalityClip, resize_bilinear, standardize_clip
from .window import WINDOW_TABLE, WindowBuffer, window_sequence, window_step

__all__ = [
    "DetectionRecord",
    "FaceDetection",
    "MODALITIES",
    "ModalityClip",
    "WINDOW_TABLE",
    "WindowBuffer",
    "cone_gray",
    "cone_layer",
    "decode_ppm",
    "encode_ppm",
    "fer_gray",
    "gaze_direction",
    "gf_gray",
    "hann",
    "hanning2d",
    "jet_colormap",
    "minmax",
    "read_jsonl",
    "render_cone_map",
    "render_fer_map",
    "render_gf_map",
    "resize_bilinear",
    "standardize_clip",
    "window_sequence",
    "window_step",
    "write_jsonl",
    "write_ppm",
]
