// placeholder until the FFI surface lands
