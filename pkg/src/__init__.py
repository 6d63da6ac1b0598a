# PCAAC point cloud denoising package
__version__ = "1.0.0"
