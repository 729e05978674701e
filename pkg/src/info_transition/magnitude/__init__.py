"""Log-space magnitudes package"""