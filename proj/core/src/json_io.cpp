namespace ddrop {}
