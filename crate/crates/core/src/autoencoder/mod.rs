//! Isotropic MLP autoencoder: affine layers with generalised tanh, Xavier
//! normal initialisation, minibatch momentum SGD and MNIST ingestion.

mod checkpoint;
mod mnist;
mod model;
mod train;

pub use checkpoint::{checkpoint_bytes, load_checkpoint, parse_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use mnist::{
    load_mnist_idx, parse_mnist_idx, rescale_pixel, synthetic_around, synthetic_dataset, unscale_pixel,
    MnistData, IMAGE_MAGIC, LABEL_MAGIC,
};
pub use model::{
    extract_latents, xavier_normal_init, xavier_std, Activation, Architecture, ForwardTrace, Gradients,
    Layer, MlpModel,
};
pub use train::{evaluate_loss, mse, train, MomentumSgd, TrainConfig, TrainReport};
