"""despeckle: unpaired high-noise/low-noise translation for OCT b-scans.

Subpackages:
    data        image I/O, padding, splitting, unpaired sampling, speckle phantom
    model       generators, shared discriminator, losses, training, inference
    baselines   classical denoisers (median, wavelet, bilateral, NL-means, BM3D)
    metrics     registration, masks, PSNR/SSIM/CNR/MSR, evaluation reports
    inspection  feature maps, overlays, layer skeletons, thickness profiles
    rating      blind expert-rating HTTP service
"""

__version__ = "0.1.0"
