"""Full-frequency temporal patching, SpecMask, and a compact spectrogram
transformer. Thin numpy-facing veneer over the C++ core."""

from ._fftp import (
    FftpConfigError,
    FftpError,
    Model,
    apply_specaugment,
    apply_specmask,
    attention_rollout,
    count_flops,
    embed,
    extract_patches,
    load_wav,
    log_mel,
    pad_or_trim,
    patch_count,
    resample,
    save_wav,
    write_corpus,
)

__all__ = [
    "FftpConfigError",
    "FftpError",
    "Model",
    "apply_specaugment",
    "apply_specmask",
    "attention_rollout",
    "count_flops",
    "embed",
    "extract_patches",
    "load_wav",
    "log_mel",
    "pad_or_trim",
    "patch_count",
    "resample",
    "save_wav",
    "write_corpus",
]
