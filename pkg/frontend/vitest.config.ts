import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'jsdom',
    include: ['tests/**/*.test.ts'],
    // the walkthrough test boots a real service subprocess
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
