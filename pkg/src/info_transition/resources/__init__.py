"""Physical constants and information-content accounting"""