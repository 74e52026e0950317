import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    // the e2e suite boots a real server and plays a full game
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
