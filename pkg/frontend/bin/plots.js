#!/usr/bin/env node
import { main } from "../dist/cli.js";

process.exit(main(process.argv.slice(2)));
