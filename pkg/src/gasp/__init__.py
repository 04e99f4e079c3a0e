"""Social-cue saliency prediction with gated attentive multimodal fusion."""

__version__ = "0.1.0"
